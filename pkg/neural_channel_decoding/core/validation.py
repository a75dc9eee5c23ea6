"""Shared validation rules and error types.

All validators raise ``ValueError`` (or a subclass) with a descriptive message
on invalid input and return the normalised value on success. The same rules are
used by the library entry points and by the command-line layer.
"""
from __future__ import annotations

import math
from typing import Any, Iterable, Optional

from .config import CODE_SETTINGS


class CapacityError(ValueError):
    """A code is too large to enumerate or to decode by exhaustive search."""


class UndefinedNveError(ValueError):
    """Every validation point was excluded from the NVE average."""


class ConstructionInfeasibleError(RuntimeError):
    """Random codebook construction exhausted its attempt budget."""

    def __init__(self, slot: int, budget: int, message: Optional[str] = None):
        self.slot = slot
        self.budget = budget
        super().__init__(
            message
            or f"could not place codeword {slot} within {budget} draws; "
               f"the distance constraint is likely infeasible for these parameters"
        )


class TrainingDivergedError(RuntimeError):
    """The training loss became non-finite."""

    def __init__(self, epoch: int, loss: float):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")


# ---------------------------------------------------------------------------
# Low-level validators
# ---------------------------------------------------------------------------

def validate_int(value: Any, name: str, minimum: Optional[int] = None,
                 maximum: Optional[int] = None) -> int:
    """Return ``value`` as an int within ``[minimum, maximum]``."""
    if isinstance(value, bool):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    try:
        as_int = int(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if as_int != value and not isinstance(value, str):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and as_int < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {as_int}")
    if maximum is not None and as_int > maximum:
        raise ValueError(f"{name} must be <= {maximum}, got {as_int}")
    return as_int


def validate_float(value: Any, name: str, allow_inf: bool = False) -> float:
    """Return ``value`` as a float, rejecting NaN (and infinities unless allowed)."""
    try:
        as_float = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a number, got {value!r}")
    if math.isnan(as_float) or (math.isinf(as_float) and not allow_inf):
        raise ValueError(f"{name} must be a finite number, got {as_float}")
    return as_float


def validate_seed(value: Any, name: str = "seed") -> int:
    """Return a 64-bit unsigned seed."""
    return validate_int(value, name, minimum=0, maximum=2 ** 64 - 1)


def is_power_of_two(value: int) -> bool:
    return value > 0 and (value & (value - 1)) == 0


def validate_block_length(n: Any, polar: bool) -> int:
    """Validate a block length N; polar codes need N = 2^n with n >= 1."""
    n = validate_int(n, "block_length", minimum=1)
    if n > CODE_SETTINGS['max_block_length']:
        raise CapacityError(
            f"block_length must be <= {CODE_SETTINGS['max_block_length']}, got {n}"
        )
    if polar and (n < 2 or not is_power_of_two(n)):
        raise ValueError(f"polar block_length must be a power of 2 >= 2, got {n}")
    return n


def validate_info_bits(k: Any, block_length: int) -> int:
    """Validate k against N and the enumeration guard."""
    k = validate_int(k, "info_bits", minimum=0)
    if k > block_length:
        raise ValueError(f"info_bits ({k}) must not exceed block_length ({block_length})")
    if k > CODE_SETTINGS['max_info_bits']:
        raise CapacityError(
            f"info_bits must be <= {CODE_SETTINGS['max_info_bits']} "
            f"(2^k codewords are enumerated), got {k}"
        )
    return k


def validate_percent(value: Any, name: str = "coverage_percent") -> float:
    """Return a percentage in (0, 100]."""
    p = validate_float(value, name)
    if not 0.0 < p <= 100.0:
        raise ValueError(f"{name} must be in (0, 100], got {p}")
    return p


def validate_positive_dims(values: Iterable[Any], name: str = "hidden_dims") -> tuple[int, ...]:
    """Return a tuple of positive layer widths."""
    dims = tuple(validate_int(v, name, minimum=1) for v in values)
    if not dims:
        raise ValueError(f"{name} must contain at least one layer width")
    return dims


def validate_sweep_values(values: Iterable[Any], name: str = "sweep values") -> tuple:
    """Sweep axes must be non-empty, sorted and free of duplicates."""
    values = tuple(values)
    if not values:
        raise ValueError(f"{name} must not be empty")
    for previous, current in zip(values, values[1:]):
        if not previous < current:
            raise ValueError(f"{name} must be sorted and unique, got {list(values)!r}")
    return values
