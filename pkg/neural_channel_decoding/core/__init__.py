"""
Core components for Neural Channel Decoding.

This package contains the codes, the channel, the network, the MAP oracle,
the Monte Carlo engine, metrics and configuration.
"""
