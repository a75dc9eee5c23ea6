"""
channel.py
BPSK modulation, AWGN noise and LLR conversion: the non-trainable layers that
sit in front of the decoder network.
"""
import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from .validation import validate_float

logger = logging.getLogger(__name__)


class InputMode(str, enum.Enum):
    CHANNEL_VALUES = 'channel'
    LLR = 'llr'

    @classmethod
    def parse(cls, value) -> 'InputMode':
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            allowed = ', '.join(member.value for member in cls)
            raise ValueError(f"input mode must be one of {{{allowed}}}, got {value!r}")


def make_rng(seed: int, *stream_ids: int) -> np.random.Generator:
    """Independent, reproducible generator for the stream ``(seed, *stream_ids)``."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream_ids))
    return np.random.Generator(np.random.PCG64(sequence))


def ebn0_to_sigma2(ebn0_db: float, rate: float) -> float:
    """Noise variance for a given Eb/N0 (dB) when each symbol carries ``rate`` info bits."""
    rate = validate_float(rate, "rate")
    if rate <= 0:
        raise ValueError(f"rate must be positive, got {rate}")
    ebn0_db = validate_float(ebn0_db, "ebn0_db", allow_inf=True)
    if ebn0_db == math.inf:
        return 0.0
    if ebn0_db == -math.inf:
        return math.inf
    return 1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0))


@dataclass(frozen=True)
class ChannelParams:
    ebn0_db: float
    rate: float
    input_mode: InputMode = InputMode.CHANNEL_VALUES

    def __post_init__(self):
        object.__setattr__(self, 'input_mode', InputMode.parse(self.input_mode))
        if not 0.0 < self.rate <= 1.0:
            raise ValueError(f"rate must be in (0, 1], got {self.rate}")

    @property
    def noise_variance(self) -> float:
        return ebn0_to_sigma2(self.ebn0_db, self.rate)


def bpsk_modulate(bits) -> np.ndarray:
    """Map bit 0 to +1.0 and bit 1 to -1.0."""
    bits = np.asarray(bits)
    if bits.size and not np.all((bits == 0) | (bits == 1)):
        raise ValueError("BPSK input must contain only 0 and 1")
    return 1.0 - 2.0 * bits.astype(np.float64)


def add_awgn(symbols, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """
    Add independent zero-mean Gaussian noise of variance ``sigma2``.

    Exactly one normal sample is drawn per symbol, also when ``sigma2`` is zero,
    so stream positions do not depend on the SNR.
    """
    if sigma2 < 0:
        raise ValueError(f"noise variance must be >= 0, got {sigma2}")
    symbols = np.asarray(symbols, dtype=np.float64)
    noise = rng.standard_normal(symbols.shape)
    return symbols + math.sqrt(sigma2) * noise


def to_llr(received, sigma2: float) -> np.ndarray:
    """Channel LLR ln P(x=0|y)/P(x=1|y) = 2y / sigma^2."""
    if sigma2 is None or not sigma2 > 0:
        raise ValueError(f"LLR conversion needs a positive noise variance, got {sigma2}")
    return 2.0 * np.asarray(received, dtype=np.float64) / sigma2


def transmit(codewords, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """Modulate a batch of codewords and pass it through the AWGN channel."""
    return add_awgn(bpsk_modulate(codewords), sigma2, rng)


def decoder_input(received, sigma2, input_mode) -> np.ndarray:
    """What the network sees: the raw channel values or their LLRs."""
    if InputMode.parse(input_mode) is InputMode.LLR:
        return to_llr(received, sigma2)
    return np.asarray(received, dtype=np.float64)
