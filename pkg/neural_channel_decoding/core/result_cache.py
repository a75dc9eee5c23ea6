"""
result_cache.py
Caching of MAP reference curves so each (code, grid, words, seed, message set)
is simulated once.
"""
import hashlib
import json
import logging
import pickle
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence

from .codebook import Codebook, CodeParams
from .config import CACHE_DIR
from .map_oracle import MapDecoder, map_ber_curve
from .metrics import BerCurve

logger = logging.getLogger(__name__)


@dataclass
class CacheEntry:
    """A cached MAP curve and the key it was computed for."""
    curve: BerCurve
    key_fields: dict


class MapCurveCache:
    """
    Thread-safe cache of MAP reference curves.

    Entries live in memory and, when a cache directory is configured, are
    mirrored to one pickle file per key so later runs can reuse them.
    """

    _instance = None
    _instance_lock = threading.Lock()

    def __init__(self, cache_dir: Optional[str] = None):
        self._cache: Dict[str, CacheEntry] = {}
        self._lock = threading.RLock()
        self._key_locks: Dict[str, threading.Lock] = {}
        self._cache_dir = Path(cache_dir) if cache_dir else None
        self.hits = 0
        self.misses = 0
        self._ensure_cache_dir()

    @classmethod
    def shared(cls) -> 'MapCurveCache':
        """Process-wide cache configured from NND_CACHE_DIR."""
        with cls._instance_lock:
            if cls._instance is None:
                cls._instance = cls(CACHE_DIR or None)
            return cls._instance

    def _ensure_cache_dir(self):
        if self._cache_dir is None:
            return
        try:
            self._cache_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logger.warning(f"Failed to create cache directory {self._cache_dir}: {e}; caching in memory only")
            self._cache_dir = None

    @staticmethod
    def key_fields(params: CodeParams, snr_list_db: Sequence[float], words_per_snr: int, seed: int,
                   message_indices: Optional[Sequence[int]] = None) -> dict:
        return {
            'code': params.to_dict(),
            'snr_list_db': [repr(float(s)) for s in snr_list_db],
            'words_per_snr': int(words_per_snr),
            'seed': int(seed),
            'messages': None if message_indices is None else [int(i) for i in message_indices],
        }

    @staticmethod
    def cache_key(key_fields: dict) -> str:
        key_string = json.dumps(key_fields, sort_keys=True)
        return hashlib.sha256(key_string.encode('utf-8')).hexdigest()

    def _cache_file(self, key: str) -> Optional[Path]:
        return self._cache_dir / f"map_{key}.pkl" if self._cache_dir else None

    def _load_entry(self, key: str, key_fields: dict) -> Optional[CacheEntry]:
        cache_file = self._cache_file(key)
        if cache_file is None or not cache_file.exists():
            return None
        try:
            with open(cache_file, 'rb') as f:
                entry: CacheEntry = pickle.load(f)
        except Exception as e:
            logger.debug(f"Failed to load cache entry {cache_file.name}: {e}")
            try:
                cache_file.unlink()
            except OSError:
                pass
            return None
        if entry.key_fields != key_fields:
            logger.debug(f"Cache entry {cache_file.name} does not match its key; ignoring")
            return None
        return entry

    def _save_entry(self, key: str, entry: CacheEntry):
        cache_file = self._cache_file(key)
        if cache_file is None:
            return
        temp_file = cache_file.with_name(cache_file.name + '.incomplete')
        try:
            with open(temp_file, 'wb') as f:
                pickle.dump(entry, f)
            temp_file.replace(cache_file)
        except Exception as e:
            logger.warning(f"Failed to save cache entry to disk: {e}")

    def get(self, params: CodeParams, snr_list_db: Sequence[float], words_per_snr: int,
            seed: int, message_indices: Optional[Sequence[int]] = None) -> Optional[BerCurve]:
        key_fields = self.key_fields(params, snr_list_db, words_per_snr, seed, message_indices)
        key = self.cache_key(key_fields)
        with self._lock:
            entry = self._cache.get(key)
            if entry is None:
                entry = self._load_entry(key, key_fields)
                if entry is not None:
                    self._cache[key] = entry
        return entry.curve if entry else None

    def get_or_compute(self, params: CodeParams, snr_list_db: Sequence[float], words_per_snr: int,
                       seed: int, compute: Callable[[], BerCurve],
                       message_indices: Optional[Sequence[int]] = None) -> BerCurve:
        """
        Return the cached curve, computing it with ``compute`` on a miss.

        Concurrent callers asking for the same key wait for the first one.
        """
        key_fields = self.key_fields(params, snr_list_db, words_per_snr, seed, message_indices)
        key = self.cache_key(key_fields)
        with self._lock:
            key_lock = self._key_locks.setdefault(key, threading.Lock())
        with key_lock:
            curve = self.get(params, snr_list_db, words_per_snr, seed, message_indices)
            if curve is not None:
                with self._lock:
                    self.hits += 1
                logger.debug(f"MAP curve cache hit for {params.family.value} "
                             f"N={params.block_length} k={params.info_bits}")
                return curve
            with self._lock:
                self.misses += 1
            logger.debug(f"MAP curve cache miss for {params.family.value} "
                         f"N={params.block_length} k={params.info_bits}")
            curve = compute()
            entry = CacheEntry(curve=curve, key_fields=key_fields)
            with self._lock:
                self._cache[key] = entry
            self._save_entry(key, entry)
            return curve

    def clear(self):
        """Drop the in-memory entries and any pickles in the cache directory."""
        with self._lock:
            self._cache.clear()
            self._key_locks.clear()
            if self._cache_dir is not None:
                for cache_file in self._cache_dir.glob("map_*.pkl"):
                    try:
                        cache_file.unlink()
                    except OSError as e:
                        logger.warning(f"Failed to delete cache file {cache_file}: {e}")

    def __len__(self) -> int:
        with self._lock:
            return len(self._cache)


def map_reference_curve(codebook: Codebook, snr_list_db: Sequence[float], words_per_snr: int,
                        seed: int, jobs: int = 1, message_indices: Optional[Sequence[int]] = None,
                        cache: Optional[MapCurveCache] = None) -> BerCurve:
    """MAP curve of a code through the shared cache."""
    cache = cache or MapCurveCache.shared()
    return cache.get_or_compute(
        codebook.params, snr_list_db, words_per_snr, seed,
        lambda: map_ber_curve(MapDecoder.from_codebook(codebook), snr_list_db, words_per_snr=words_per_snr,
                              seed=seed, jobs=jobs, message_indices=message_indices),
        message_indices=message_indices,
    )
