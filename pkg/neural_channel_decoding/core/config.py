"""
Centralized configuration for Neural Channel Decoding.

This module contains the default settings used throughout the toolkit. Values
that vary between machines (seed, log level, cache location) can be
overridden from the environment.
"""

import logging
import os

logger = logging.getLogger(__name__)


def _get_env_text(name, default=''):
    """Return a stripped environment value, or default when unset/blank."""
    value = os.environ.get(name)
    if value is None:
        return default
    value = value.strip()
    return value if value else default


def _get_env_int(name, default):
    """Return an integer environment value, falling back to default when invalid."""
    text = _get_env_text(name)
    if not text:
        return default
    try:
        value = int(text, 0)
    except ValueError:
        logger.warning("Ignoring %s=%r because it is not an integer", name, text)
        return default
    if value < 0 or value >= 2 ** 64:
        logger.warning("Ignoring %s=%r because it is not a 64-bit unsigned value", name, text)
        return default
    return value


# Master seed used whenever a command does not name one explicitly.
DEFAULT_SEED = _get_env_int('NND_SEED', 0)

LOG_LEVEL = _get_env_text('NND_LOG_LEVEL', 'INFO').upper()
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# Directory for the on-disk MAP curve cache. Empty keeps the cache in memory only.
CACHE_DIR = _get_env_text('NND_CACHE_DIR')

# Code construction
CODE_SETTINGS = {
    'max_block_length': 64,
    # 2^k codewords are held in memory, MAP decoding is O(2^k) per word.
    'max_info_bits': 16,
    'max_polar_exponent': 10,
    # Draws per codeword slot before random construction gives up.
    'random_attempt_budget': 1_000_000,
    # Candidates drawn per batch during rejection sampling.
    'random_draw_batch': 1024,
    'min_random_distance': 3,
}

# Channel
CHANNEL_SETTINGS = {
    'default_input_mode': 'channel',
}

# Network training, Adam uses its customary beta and epsilon defaults.
TRAINING_SETTINGS = {
    'hidden_dims': (128, 64, 32),
    'loss': 'mse',
    'learning_rate': 0.001,
    'adam_beta1': 0.9,
    'adam_beta2': 0.999,
    'adam_epsilon': 1e-8,
    'bce_clamp': 1e-12,
    'epochs': 2 ** 16,
    'log_every': 4096,
    'validation_words': 10_000,
    # Polar codes train best near 1 dB, random codes near 4 dB.
    'train_ebn0_db': {'polar': 1.0, 'random': 4.0},
}

# Monte Carlo evaluation
EVALUATION_SETTINGS = {
    'nve_snr_start_db': 0.0,
    'nve_snr_stop_db': 5.0,
    'nve_snr_points': 20,
    'nve_words_per_snr': 20_000,
    'curve_snr_start_db': 0.0,
    'curve_snr_stop_db': 5.0,
    'curve_snr_points': 11,
    'curve_words_per_snr': 100_000,
    'map_words_per_snr': 1_000_000,
    'chunk_size': 4096,
    'histogram_ebn0_db': 4.16,
    'histogram_trials': 10_000,
}

# Experiment defaults
EXPERIMENT_SETTINGS = {
    'output_dir': 'results',
    'train_snr_sweep_db': (0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0),
    'epoch_sweep': tuple(2 ** e for e in range(10, 19)),
    'learning_curve_checkpoints': tuple(2 ** e for e in range(8, 17)),
    'architectures': (
        (128, 64, 32),
        (256, 128, 64),
        (512, 256, 128),
        (1024, 512, 256),
    ),
    'scalability_hidden_dims': (1024, 512, 256),
    'scalability_codes': (
        (16, 4), (16, 8), (16, 12),
        (32, 4), (32, 8), (32, 12),
        (64, 4), (64, 8), (64, 12),
    ),
    'coverage_percents': (20.0, 40.0, 60.0, 80.0, 100.0),
    'histogram_percent': 80.0,
    'coverage_epochs': 2 ** 18,
}

# Configuration dictionary (single lookup point for the CLI and manifests)
CONFIG = {
    'code': CODE_SETTINGS,
    'channel': CHANNEL_SETTINGS,
    'training': TRAINING_SETTINGS,
    'evaluation': EVALUATION_SETTINGS,
    'experiments': EXPERIMENT_SETTINGS,
}
