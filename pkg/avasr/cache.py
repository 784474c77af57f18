"""Simple in-memory feature cache."""

from __future__ import annotations

import threading
from collections import OrderedDict
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Generic, TypeVar


T = TypeVar("T")


class FeatureCache(Generic[T]):
    """Bounded in-memory cache of decoded feature files, keyed by path.

    Cache is disabled by default so every read hits the disk.
    Enable via ``enable_cache = true`` in the run configuration.
    """

    def __init__(self, enabled: bool = False, max_entries: int = 1024):
        """Initialize cache.

        Args:
            enabled: Whether cache is enabled
            max_entries: Entries kept before least-recently-used eviction
        """
        self.enabled = enabled
        self.max_entries = max_entries
        self.hits = 0
        self.misses = 0
        self._store: OrderedDict[str, T] = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key: str) -> T | None:
        """Get value from cache.

        Returns:
            Cached value or None if not found/disabled
        """
        if not self.enabled:
            return None
        with self._lock:
            value = self._store.get(key)
            if value is None:
                self.misses += 1
                return None
            self._store.move_to_end(key)
            self.hits += 1
            return value

    def set(self, key: str, value: T) -> None:
        if not self.enabled:
            return
        with self._lock:
            self._store[key] = value
            self._store.move_to_end(key)
            while len(self._store) > self.max_entries:
                self._store.popitem(last=False)

    def delete(self, key: str) -> None:
        with self._lock:
            self._store.pop(key, None)

    def clear(self) -> None:
        with self._lock:
            self._store.clear()

    def __len__(self) -> int:
        return len(self._store)

    def get_or_load(self, path: Path, loader: Callable[[Path], T]) -> T:
        """Return the cached value for ``path`` or load and remember it."""
        key = self.make_key(path)
        value = self.get(key)
        if value is None:
            value = loader(path)
            self.set(key, value)
        return value

    def prefetch(self, paths: Iterable[Path], loader: Callable[[Path], T], workers: int = 4) -> int:
        """Load uncached paths on a thread pool.

        Returns:
            Number of files loaded
        """
        if not self.enabled:
            return 0
        pending = [p for p in dict.fromkeys(paths) if self.make_key(p) not in self._store]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for path, value in zip(pending, pool.map(loader, pending)):
                self.set(self.make_key(path), value)
        return len(pending)

    @staticmethod
    def make_key(path: Path) -> str:
        """Create cache key.

        Examples:
            >>> FeatureCache.make_key(Path("/data/a.feat"))
            'avasr:/data/a.feat'
        """
        return f"avasr:{Path(path)}"
