"""
Neural Channel Decoding Package

A toolkit for training small feedforward networks to decode short block codes
over a BPSK/AWGN channel and comparing them against brute-force MAP decoding.
"""

__version__ = "0.1.0"
