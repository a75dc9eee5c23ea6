import contextlib
import logging
import os
import shutil
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

logger = logging.getLogger(__name__)

INCOMPLETE_SUFFIX = '.incomplete'


def snr_grid(start_db: float, stop_db: float, count: int) -> np.ndarray:
    """Equally spaced SNR points with both endpoints included."""
    if count < 1:
        raise ValueError(f"SNR grid needs at least one point, got {count}")
    if count == 1:
        if start_db != stop_db:
            raise ValueError("a one-point SNR grid needs start == stop")
        return np.array([float(start_db)])
    return np.linspace(float(start_db), float(stop_db), int(count))


def parse_snr_grid(text: str) -> np.ndarray:
    """
    Parse ``start:stop:count`` (inclusive endpoints) or a comma-separated list.

    Examples:
        "0:5:20" -> 20 points from 0 dB to 5 dB
        "0,2,4"  -> [0, 2, 4]
    """
    if text is None or not str(text).strip():
        raise ValueError("SNR grid must not be empty")
    text = str(text).strip()
    if ':' in text:
        parts = text.split(':')
        if len(parts) != 3:
            raise ValueError(f"SNR grid must look like start:stop:count, got {text!r}")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ValueError(f"SNR grid must look like start:stop:count, got {text!r}")
        grid = snr_grid(start, stop, count)
    else:
        try:
            grid = np.array([float(part) for part in text.split(',') if part.strip()])
        except ValueError:
            raise ValueError(f"SNR list must contain numbers, got {text!r}")
    if grid.size == 0 or np.any(np.isnan(grid)):
        raise ValueError(f"invalid SNR grid {text!r}")
    if np.any(np.diff(grid) <= 0):
        raise ValueError(f"SNR grid must be strictly increasing, got {text!r}")
    return grid


def format_grid(grid: Sequence[float]) -> str:
    """Inverse of parse_snr_grid for explicit lists (full precision)."""
    return ','.join(repr(float(value)) for value in grid)


def derive_seed(master_seed: int, *keys: int) -> int:
    """Derive an independent 64-bit seed from a master seed and integer keys."""
    sequence = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def number_label(value: float) -> str:
    """Filesystem-friendly label for a number: 1.0 -> '1', 4.16 -> '4p16', -2 -> 'm2'."""
    text = f"{float(value):g}"
    return text.replace('-', 'm').replace('.', 'p')


@contextlib.contextmanager
def atomic_output(path) -> Iterator[Path]:
    """
    Yield a temporary ``<path>.incomplete`` location and move it into place on success.

    On failure the partial file is removed so a finished-looking artifact never
    exists without being complete.
    """
    final_path = Path(path)
    final_path.parent.mkdir(parents=True, exist_ok=True)
    temp_path = final_path.with_name(final_path.name + INCOMPLETE_SUFFIX)
    try:
        yield temp_path
    except BaseException:
        try:
            if temp_path.is_dir():
                shutil.rmtree(temp_path)
            elif temp_path.exists():
                temp_path.unlink()
        except OSError as exc:
            logger.warning(f"Could not remove partial output {temp_path}: {exc}")
        raise
    if final_path.is_dir():
        shutil.rmtree(final_path)
    os.replace(temp_path, final_path)


@contextlib.contextmanager
def incomplete_directory(path) -> Iterator[Path]:
    """
    Yield ``<path>.incomplete/`` for a run and rename it to ``path`` on success.

    A failed run leaves the ``.incomplete`` directory behind for inspection.
    """
    final_path = Path(path)
    temp_path = final_path.with_name(final_path.name + INCOMPLETE_SUFFIX)
    if temp_path.exists():
        shutil.rmtree(temp_path)
    temp_path.mkdir(parents=True)
    yield temp_path
    if final_path.exists():
        shutil.rmtree(final_path)
    os.replace(temp_path, final_path)
