"""
map_oracle.py
Brute-force MAP decoding: correlate the received vector with every modulated
codeword and pick the best. With uniformly distributed messages and
equal-energy BPSK words this is also the ML and minimum-distance decision.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .channel import bpsk_modulate
from .codebook import Codebook
from .config import EVALUATION_SETTINGS
from .metrics import BerCurve
from .simulation import DecodeFn, simulate_curve

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MapDecoder:
    codebook: Codebook
    modulated: np.ndarray

    @classmethod
    def from_codebook(cls, codebook: Codebook) -> 'MapDecoder':
        modulated = bpsk_modulate(codebook.codewords)
        modulated.setflags(write=False)
        return cls(codebook=codebook, modulated=modulated)


def map_decode_indices(decoder: MapDecoder, received) -> np.ndarray:
    """Message index for every row of ``received``; ties go to the lowest index."""
    received = np.atleast_2d(np.asarray(received, dtype=np.float64))
    n = decoder.codebook.params.block_length
    if received.shape[1] != n:
        raise ValueError(f"received vectors must have length {n}, got {received.shape[1]}")
    # Bound the rows x codewords correlation matrix.
    rows_per_block = max(1, (1 << 22) // decoder.modulated.shape[0])
    indices = np.empty(received.shape[0], dtype=np.int64)
    for start in range(0, received.shape[0], rows_per_block):
        block = received[start:start + rows_per_block]
        # argmax returns the first maximum, i.e. the lowest message index.
        indices[start:start + rows_per_block] = np.argmax(block @ decoder.modulated.T, axis=1)
    return indices


def map_decode(decoder: MapDecoder, received) -> Tuple[int, np.ndarray]:
    """Decode one received vector to (message index, information bits)."""
    received = np.asarray(received, dtype=np.float64)
    if received.ndim != 1:
        raise ValueError("map_decode expects a single received vector")
    index = int(map_decode_indices(decoder, received)[0])
    return index, decoder.codebook.messages[index].copy()


def map_decode_fn(decoder: MapDecoder) -> DecodeFn:
    def _decode(received: np.ndarray, sigma2: float) -> np.ndarray:
        return decoder.codebook.messages[map_decode_indices(decoder, received)]

    return _decode


def map_ber_curve(decoder: MapDecoder, snr_list_db: Sequence[float],
                  words_per_snr: Optional[int] = None, seed: int = 0, jobs: int = 1,
                  message_indices: Optional[Sequence[int]] = None) -> BerCurve:
    """MAP reference curve; 10^6 words per point unless told otherwise."""
    if words_per_snr is None:
        words_per_snr = EVALUATION_SETTINGS['map_words_per_snr']
    return simulate_curve(
        map_decode_fn(decoder), decoder.codebook, snr_list_db, words_per_snr, seed,
        message_indices=message_indices, jobs=jobs, label="MAP",
    )
