"""
metrics.py
Bit and block error rates, BER curves and the normalized validation error.
"""
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .channel import InputMode, ebn0_to_sigma2, make_rng, transmit
from .codebook import Codebook
from .config import EVALUATION_SETTINGS
from .neural_net import Mlp, decode
from .utils import snr_grid
from .validation import UndefinedNveError, validate_int

logger = logging.getLogger(__name__)

CURVE_COLUMNS = ['ebn0_db', 'ber', 'bler', 'bit_trials', 'block_trials']

# Stream prefix for single-word trials; curve streams use prefix 0.
_SINGLE_WORD_STREAM = 1


@dataclass(frozen=True, eq=False)
class BerCurve:
    """One decoder on one code: rows of (ebn0_db, ber, bler, bit_trials, block_trials)."""
    frame: pd.DataFrame

    def __post_init__(self):
        missing = [c for c in CURVE_COLUMNS if c not in self.frame.columns]
        if missing:
            raise ValueError(f"BER curve is missing columns {missing}")
        frame = self.frame[CURVE_COLUMNS].reset_index(drop=True).copy()
        frame['ebn0_db'] = frame['ebn0_db'].astype(np.float64)
        frame['ber'] = frame['ber'].astype(np.float64)
        frame['bler'] = frame['bler'].astype(np.float64)
        frame['bit_trials'] = frame['bit_trials'].astype(np.int64)
        frame['block_trials'] = frame['block_trials'].astype(np.int64)
        snrs = frame['ebn0_db'].to_numpy()
        if np.any(np.diff(snrs) <= 0):
            raise ValueError("BER curve rows must be sorted by ebn0_db without duplicates")
        for column in ('ber', 'bler'):
            values = frame[column].to_numpy()
            if np.any((values < 0) | (values > 1)):
                raise ValueError(f"{column} values must lie in [0, 1]")
        if np.any(frame['bler'].to_numpy() < frame['ber'].to_numpy() - 1e-12):
            raise ValueError("bler must not be below ber for equal-length blocks")
        object.__setattr__(self, 'frame', frame)

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence]) -> 'BerCurve':
        return cls(pd.DataFrame(list(rows), columns=CURVE_COLUMNS))

    @property
    def ebn0_db(self) -> np.ndarray:
        return self.frame['ebn0_db'].to_numpy()

    @property
    def ber(self) -> np.ndarray:
        return self.frame['ber'].to_numpy()

    @property
    def bler(self) -> np.ndarray:
        return self.frame['bler'].to_numpy()

    def __len__(self) -> int:
        return len(self.frame)


@dataclass(frozen=True)
class NveResult:
    train_ebn0_db: float
    ratios: Tuple[Tuple[float, float], ...]
    nve: float
    skipped_points: Tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            'train_ebn0_db': self.train_ebn0_db,
            'ratios': [list(pair) for pair in self.ratios],
            'nve': self.nve,
            'skipped_points': list(self.skipped_points),
        }


def _error_matrix(estimated, truth) -> np.ndarray:
    estimated = np.atleast_2d(np.asarray(estimated))
    truth = np.atleast_2d(np.asarray(truth))
    if estimated.size == 0 or truth.size == 0:
        raise ValueError("error rates need at least one block")
    if estimated.shape != truth.shape:
        raise ValueError(f"estimate shape {estimated.shape} does not match truth shape {truth.shape}")
    return estimated != truth


def ber(estimated, truth) -> float:
    """Fraction of differing bits."""
    errors = _error_matrix(estimated, truth)
    return float(errors.sum() / errors.size)


def bler(estimated, truth) -> float:
    """Fraction of blocks with at least one bit error."""
    errors = _error_matrix(estimated, truth)
    return float(errors.any(axis=1).sum() / errors.shape[0])


def nve_grid() -> np.ndarray:
    """The standard validation grid: 20 points from 0 dB to 5 dB inclusive."""
    return snr_grid(
        EVALUATION_SETTINGS['nve_snr_start_db'],
        EVALUATION_SETTINGS['nve_snr_stop_db'],
        EVALUATION_SETTINGS['nve_snr_points'],
    )


def nve(nnd_curve: BerCurve, map_curve: BerCurve, train_ebn0_db: float) -> NveResult:
    """
    Mean over validation SNRs of BER_NND / BER_MAP.

    Points where the MAP curve recorded no bit error are excluded and reported
    in ``skipped_points``.
    """
    if len(nnd_curve) != len(map_curve) or not np.array_equal(nnd_curve.ebn0_db, map_curve.ebn0_db):
        raise ValueError("NND and MAP curves must share the same SNR grid")
    ratios, skipped = [], []
    for snr, nnd_ber, map_ber in zip(nnd_curve.ebn0_db, nnd_curve.ber, map_curve.ber):
        if map_ber == 0:
            logger.warning(f"NVE: MAP BER is zero at {snr} dB; point excluded")
            skipped.append(float(snr))
            continue
        ratios.append((float(snr), float(nnd_ber / map_ber)))
    if not ratios:
        raise UndefinedNveError("NVE is undefined: the MAP BER is zero at every validation point")
    value = float(np.mean([ratio for _, ratio in ratios]))
    return NveResult(
        train_ebn0_db=float(train_ebn0_db),
        ratios=tuple(ratios),
        nve=value,
        skipped_points=tuple(skipped),
    )


def binomial_tolerance(p: float, n: int, sigmas: float = 3.0) -> float:
    """``sigmas`` standard deviations of an error-rate estimate from n trials."""
    if n <= 0:
        raise ValueError(f"trial count must be positive, got {n}")
    p = min(max(float(p), 0.0), 1.0)
    return sigmas * math.sqrt(p * (1.0 - p) / n)


def single_word_bler(mlp: Mlp, codebook: Codebook, index: int, ebn0_db: float, trials: int,
                     seed: int, input_mode=InputMode.CHANNEL_VALUES) -> float:
    """BLER of one codeword over ``trials`` fresh noise realizations."""
    index = validate_int(index, "codeword index", minimum=0, maximum=codebook.size - 1)
    trials = validate_int(trials, "trials", minimum=1)
    sigma2 = ebn0_to_sigma2(ebn0_db, codebook.params.rate)
    rng = make_rng(seed, _SINGLE_WORD_STREAM, index)
    words = np.repeat(codebook.codewords[index][None, :], trials, axis=0)
    received = transmit(words, sigma2, rng)
    estimates = decode(mlp, received, input_mode, sigma2)
    return bler(estimates, np.repeat(codebook.messages[index][None, :], trials, axis=0))
