"""
codebook.py
Polar and random block codes: construction, enumeration and training splits.
"""
import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .config import CODE_SETTINGS
from .validation import (
    ConstructionInfeasibleError,
    validate_block_length,
    validate_info_bits,
    validate_int,
    validate_percent,
    validate_seed,
)

logger = logging.getLogger(__name__)

KERNEL = np.array([[1, 0], [1, 1]], dtype=np.uint8)

_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint8)
_COMPARISON_BUDGET = 1 << 22


class CodeFamily(str, enum.Enum):
    POLAR = 'polar'
    RANDOM = 'random'

    @classmethod
    def parse(cls, value) -> 'CodeFamily':
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            allowed = ', '.join(member.value for member in cls)
            raise ValueError(f"code family must be one of {{{allowed}}}, got {value!r}")


@dataclass(frozen=True)
class CodeParams:
    """Parameters of one code instance. ``seed`` only matters for random codes."""
    family: CodeFamily
    block_length: int
    info_bits: int
    seed: int = 0

    def __post_init__(self):
        family = CodeFamily.parse(self.family)
        object.__setattr__(self, 'family', family)
        n = validate_block_length(self.block_length, polar=family is CodeFamily.POLAR)
        object.__setattr__(self, 'block_length', n)
        object.__setattr__(self, 'info_bits', validate_info_bits(self.info_bits, n))
        object.__setattr__(self, 'seed', validate_seed(self.seed))
        if family is CodeFamily.POLAR and self.info_bits < 1:
            raise ValueError("polar codes need at least one information bit")

    @property
    def rate(self) -> float:
        return self.info_bits / self.block_length

    @property
    def num_codewords(self) -> int:
        return 2 ** self.info_bits

    def to_dict(self) -> dict:
        return {
            'family': self.family.value,
            'block_length': self.block_length,
            'info_bits': self.info_bits,
            'seed': self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'CodeParams':
        return cls(
            family=data['family'],
            block_length=data['block_length'],
            info_bits=data['info_bits'],
            seed=data.get('seed', 0),
        )


@dataclass(frozen=True, eq=False)
class Codebook:
    """
    All 2^k codewords of one code, row m encoding message m.

    ``messages[m]`` holds the big-endian information bits of m, so the two arrays
    together form the training set (inputs and labels) of a decoder.
    """
    params: CodeParams
    codewords: np.ndarray
    messages: np.ndarray
    frozen_set: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        for array in (self.codewords, self.messages):
            array.setflags(write=False)

    @property
    def size(self) -> int:
        return self.codewords.shape[0]


@dataclass(frozen=True)
class CodebookSplit:
    """Seen (training) and unseen codeword indices of one coverage experiment."""
    seen: Tuple[int, ...]
    unseen: Tuple[int, ...]
    coverage_percent: float
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            'seen': list(self.seen),
            'unseen': list(self.unseen),
            'coverage_percent': self.coverage_percent,
            'seed': self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'CodebookSplit':
        return cls(
            seen=tuple(int(i) for i in data['seen']),
            unseen=tuple(int(i) for i in data['unseen']),
            coverage_percent=float(data['coverage_percent']),
            seed=int(data.get('seed', 0)),
        )


# ---------------------------------------------------------------------------
# Polar codes
# ---------------------------------------------------------------------------

def polar_generator_matrix(n: int) -> np.ndarray:
    """Return G_N = F^{(x)n} over GF(2) for F = [[1, 0], [1, 1]]."""
    n = validate_int(n, "n", minimum=1, maximum=CODE_SETTINGS['max_polar_exponent'])
    generator = KERNEL.copy()
    for _ in range(n - 1):
        generator = np.kron(generator, KERNEL) % 2
    return generator.astype(np.uint8)


def bhattacharyya_parameters(block_length: int) -> np.ndarray:
    """
    Bhattacharyya parameters of the N synthetic bit-channels of a BEC(0.5).

    Each level splits every channel Z into the pair (2Z - Z^2, Z^2), the worse
    child taking the even index.
    """
    z = np.array([0.5])
    while z.size < block_length:
        children = np.empty(2 * z.size)
        children[0::2] = 2 * z - z ** 2
        children[1::2] = z ** 2
        z = children
    return z


def polar_frozen_set(block_length: int, info_bits: int) -> Tuple[int, ...]:
    """
    Indices of the N - k least reliable bit-channels, sorted ascending.

    Ties in the Bhattacharyya parameter freeze the lower index first.
    """
    block_length = validate_block_length(block_length, polar=True)
    info_bits = validate_int(info_bits, "info_bits", minimum=0, maximum=block_length)
    z = bhattacharyya_parameters(block_length)
    indices = np.arange(block_length)
    # Primary key: larger Z first; secondary key: lower index first.
    order = np.lexsort((indices, -z))
    frozen = order[:block_length - info_bits]
    return tuple(int(i) for i in np.sort(frozen))


def info_positions(block_length: int, frozen_set) -> np.ndarray:
    frozen = np.zeros(block_length, dtype=bool)
    frozen[list(frozen_set)] = True
    return np.flatnonzero(~frozen)


def polar_encode(info: np.ndarray, frozen_set, generator: np.ndarray) -> np.ndarray:
    """
    Encode k information bits as x = u G mod 2.

    ``u`` carries zeros at the frozen positions and the information bits, in
    order, at the remaining positions. Accepts a single vector or a batch of rows.
    """
    info = np.asarray(info, dtype=np.uint8)
    block_length = generator.shape[0]
    if generator.shape != (block_length, block_length):
        raise ValueError(f"generator must be square, got shape {generator.shape}")
    if any(not 0 <= i < block_length for i in frozen_set):
        raise ValueError(f"frozen_set contains indices outside [0, {block_length})")
    positions = info_positions(block_length, frozen_set)
    if info.shape[-1] != positions.size:
        raise ValueError(
            f"expected {positions.size} information bits for N={block_length} "
            f"with {len(frozen_set)} frozen positions, got {info.shape[-1]}"
        )
    u = np.zeros(info.shape[:-1] + (block_length,), dtype=np.int64)
    u[..., positions] = info
    return ((u @ generator.astype(np.int64)) % 2).astype(np.uint8)


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

def message_bits(info_bits: int) -> np.ndarray:
    """2^k x k matrix whose row m holds the big-endian bits of m."""
    messages = np.arange(2 ** info_bits, dtype=np.int64)
    shifts = np.arange(info_bits - 1, -1, -1, dtype=np.int64)
    return ((messages[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def min_distance(codebook: Codebook) -> int:
    """Minimum pairwise Hamming distance; N + 1 when there is only one codeword."""
    best = codebook.params.block_length + 1
    if codebook.size < 2:
        return best
    packed = np.packbits(codebook.codewords, axis=1)
    rows_per_chunk = max(1, _COMPARISON_BUDGET // (codebook.size * packed.shape[1]))
    for start in range(0, codebook.size - 1, rows_per_chunk):
        stop = min(start + rows_per_chunk, codebook.size - 1)
        xor = np.bitwise_xor(packed[start:stop, None, :], packed[None, :, :])
        distances = _POPCOUNT[xor].sum(axis=2, dtype=np.int32)
        # Only pairs (i, j) with j > i count.
        rows = np.arange(start, stop)[:, None]
        distances[np.arange(codebook.size)[None, :] <= rows] = best
        best = min(best, int(distances.min()))
    return best


def is_linear(codebook: Codebook) -> bool:
    """True when the codebook is closed under bitwise XOR."""
    words = {row.tobytes() for row in codebook.codewords}
    for a in codebook.codewords:
        sums = np.bitwise_xor(codebook.codewords, a)
        if any(row.tobytes() not in words for row in sums):
            return False
    return True


def build_polar_codebook(params: CodeParams) -> Codebook:
    if params.family is not CodeFamily.POLAR:
        raise ValueError(f"expected a polar code, got {params.family.value}")
    n = int(math.log2(params.block_length))
    generator = polar_generator_matrix(n)
    frozen = polar_frozen_set(params.block_length, params.info_bits)
    messages = message_bits(params.info_bits)
    codewords = polar_encode(messages, frozen, generator)
    return Codebook(params=params, codewords=codewords, messages=messages, frozen_set=frozen)


def hamming_bound_capacity(block_length: int, min_dist: int) -> int:
    """Most codewords any N-bit code with the given minimum distance can hold."""
    radius = (min_dist - 1) // 2
    ball = sum(math.comb(block_length, i) for i in range(radius + 1))
    return (1 << block_length) // ball


def build_random_codebook(params: CodeParams, attempt_budget: Optional[int] = None) -> Codebook:
    """
    Draw 2^k codewords by seeded rejection sampling.

    Every candidate is a uniform N-bit word; it is accepted only if it lies at
    Hamming distance >= 3 from every codeword accepted so far. Candidates are
    drawn in fixed-size batches, so the result depends only on the parameters.
    Codes that the Hamming bound rules out fail before the first draw.
    """
    if params.family is not CodeFamily.RANDOM:
        raise ValueError(f"expected a random code, got {params.family.value}")
    budget = attempt_budget if attempt_budget is not None else CODE_SETTINGS['random_attempt_budget']
    budget = validate_int(budget, "attempt_budget", minimum=1)
    batch_size = CODE_SETTINGS['random_draw_batch']
    min_dist = CODE_SETTINGS['min_random_distance']

    n, total = params.block_length, params.num_codewords
    capacity = hamming_bound_capacity(n, min_dist)
    if total > capacity:
        raise ConstructionInfeasibleError(
            capacity, budget,
            f"no {n}-bit code with minimum distance {min_dist} holds {total} codewords "
            f"(Hamming bound: at most {capacity})",
        )

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(params.seed)))
    accepted = np.zeros((total, n), dtype=np.uint8)
    packed = np.zeros((total, (n + 7) // 8), dtype=np.uint8)
    for slot in range(total):
        attempts = 0
        placed = False
        while attempts < budget:
            # Bound the candidate x accepted comparison to a few million bytes.
            affordable = max(1, _COMPARISON_BUDGET // max(1, slot * packed.shape[1]))
            draw = min(batch_size, budget - attempts, affordable)
            candidates = rng.integers(0, 2, size=(draw, n), dtype=np.uint8)
            if slot == 0:
                ok = np.array([0])
            else:
                candidate_bytes = np.packbits(candidates, axis=1)
                xor = np.bitwise_xor(candidate_bytes[:, None, :], packed[None, :slot, :])
                distances = _POPCOUNT[xor].sum(axis=2, dtype=np.int32)
                ok = np.flatnonzero(distances.min(axis=1) >= min_dist)
            if ok.size:
                accepted[slot] = candidates[ok[0]]
                packed[slot] = np.packbits(accepted[slot])
                placed = True
                break
            attempts += draw
        if not placed:
            raise ConstructionInfeasibleError(slot, budget)

    logger.debug(f"Random codebook N={n} k={params.info_bits} seed={params.seed} constructed")
    return Codebook(params=params, codewords=accepted, messages=message_bits(params.info_bits))


def enumerate_codebook(params: CodeParams) -> Codebook:
    """Build the full codebook of a code; message m maps to codeword m."""
    if params.family is CodeFamily.POLAR:
        return build_polar_codebook(params)
    return build_random_codebook(params)


# ---------------------------------------------------------------------------
# Coverage splits
# ---------------------------------------------------------------------------

def split_codebook(codebook: Codebook, percent: float, seed: int) -> CodebookSplit:
    """
    Pick a uniformly random subset covering ``percent`` % of the codewords.

    The subset size is round-half-up(p/100 * 2^k); both index lists are sorted.
    """
    percent = validate_percent(percent)
    seed = validate_seed(seed)
    total = codebook.size
    n_seen = int(math.floor(percent / 100.0 * total + 0.5))
    n_seen = min(n_seen, total)
    if n_seen < 1:
        raise ValueError(
            f"coverage {percent}% of {total} codewords selects no codeword for training"
        )
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    order = rng.permutation(total)
    seen = np.sort(order[:n_seen])
    unseen = np.sort(order[n_seen:])
    return CodebookSplit(
        seen=tuple(int(i) for i in seen),
        unseen=tuple(int(i) for i in unseen),
        coverage_percent=percent,
        seed=seed,
    )
