"""
simulation.py
Monte Carlo BER/BLER estimation shared by the network and the MAP oracle.

Words for SNR point s are processed in chunks; chunk c takes its messages and
noise from its own stream keyed by (seed, s, c). The estimate therefore does
not depend on the number of workers, and two decoders simulated with the same
seed see exactly the same transmissions.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .channel import ChannelParams, InputMode, make_rng, transmit
from .codebook import Codebook
from .config import EVALUATION_SETTINGS
from .metrics import BerCurve
from .neural_net import Mlp, decode
from .validation import validate_int

logger = logging.getLogger(__name__)

_CURVE_STREAM = 0

# (received batch, noise variance) -> decoded information bits
DecodeFn = Callable[[np.ndarray, float], np.ndarray]


def nnd_decode_fn(mlp: Mlp, input_mode=InputMode.CHANNEL_VALUES) -> DecodeFn:
    input_mode = InputMode.parse(input_mode)

    def _decode(received: np.ndarray, sigma2: float) -> np.ndarray:
        return decode(mlp, received, input_mode, sigma2)

    return _decode


def _chunk_plan(words: int, chunk_size: int) -> list[Tuple[int, int]]:
    return [(index, min(chunk_size, words - start))
            for index, start in enumerate(range(0, words, chunk_size))]


def simulate_curve(decode_fn: DecodeFn, codebook: Codebook, snr_list_db: Sequence[float],
                   words_per_snr: int, seed: int, message_indices: Optional[Sequence[int]] = None,
                   jobs: int = 1, chunk_size: Optional[int] = None, label: str = "decoder") -> BerCurve:
    """
    Estimate BER and BLER at every SNR of the grid.

    Messages are drawn uniformly from ``message_indices`` (all codewords when
    omitted), encoded, modulated, noised and decoded with ``decode_fn``.
    """
    words_per_snr = validate_int(words_per_snr, "words_per_snr", minimum=1)
    jobs = validate_int(jobs, "jobs", minimum=1)
    chunk_size = validate_int(chunk_size or EVALUATION_SETTINGS['chunk_size'], "chunk_size", minimum=1)
    grid = np.asarray(snr_list_db, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("SNR list must be a non-empty sequence")
    pool = (np.arange(codebook.size) if message_indices is None
            else np.asarray(message_indices, dtype=np.int64))
    if pool.size == 0:
        raise ValueError("cannot simulate over an empty set of codewords")
    if np.any((pool < 0) | (pool >= codebook.size)):
        raise ValueError(f"message indices must lie in [0, {codebook.size})")

    k = codebook.params.info_bits
    plan = _chunk_plan(words_per_snr, chunk_size)

    def run_chunk(snr_index: int, sigma2: float, chunk: Tuple[int, int]) -> Tuple[int, int]:
        chunk_index, count = chunk
        rng = make_rng(seed, _CURVE_STREAM, snr_index, chunk_index)
        picks = pool[rng.integers(0, pool.size, size=count)]
        received = transmit(codebook.codewords[picks], sigma2, rng)
        errors = np.asarray(decode_fn(received, sigma2)) != codebook.messages[picks]
        return int(errors.sum()), int(errors.any(axis=1).sum())

    rows = []
    executor = ThreadPoolExecutor(max_workers=jobs, thread_name_prefix="mc") if jobs > 1 else None
    try:
        for snr_index, snr in enumerate(grid):
            sigma2 = ChannelParams(ebn0_db=float(snr), rate=codebook.params.rate).noise_variance
            if executor is not None:
                results = list(executor.map(lambda c: run_chunk(snr_index, sigma2, c), plan))
            else:
                results = [run_chunk(snr_index, sigma2, c) for c in plan]
            bit_errors = sum(r[0] for r in results)
            block_errors = sum(r[1] for r in results)
            bit_trials = words_per_snr * k
            rows.append((float(snr), bit_errors / bit_trials, block_errors / words_per_snr,
                         bit_trials, words_per_snr))
            logger.info(
                f"{label}: {snr:.4g} dB -> BER {bit_errors / bit_trials:.4g}, "
                f"BLER {block_errors / words_per_snr:.4g} ({words_per_snr} words)"
            )
    finally:
        if executor is not None:
            executor.shutdown(wait=True)
    return BerCurve.from_rows(rows)


def nnd_ber_curve(mlp: Mlp, codebook: Codebook, snr_list_db: Sequence[float], words_per_snr: int,
                  seed: int, input_mode=InputMode.CHANNEL_VALUES,
                  message_indices: Optional[Sequence[int]] = None, jobs: int = 1) -> BerCurve:
    return simulate_curve(
        nnd_decode_fn(mlp, input_mode), codebook, snr_list_db, words_per_snr, seed,
        message_indices=message_indices, jobs=jobs, label="NND",
    )
