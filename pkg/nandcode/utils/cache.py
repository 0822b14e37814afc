"""Memoisation of expensive code constructions.

Codebooks and capacities are immutable once built, so entries never expire;
only the size bound evicts them, least recently used first.
"""

import logging
from collections import OrderedDict
from dataclasses import dataclass
from typing import Any, Callable, Generic, List, Optional, TypeVar

T = TypeVar("T")

logger = logging.getLogger(__name__)


@dataclass
class CacheEntry(Generic[T]):
    """A built value and how often it was served."""

    value: T
    hits: int = 0


class Cache:
    """Bounded LRU store of built objects keyed by ``<kind>:<name>`` strings."""

    def __init__(self, max_size: int = 64) -> None:
        """Create an empty cache.

        Args:
            max_size: Entries kept before the least recently used one is dropped.
        """
        self._entries: "OrderedDict[str, CacheEntry[Any]]" = OrderedDict()
        self._max_size = max_size

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def get(self, key: str) -> Optional[Any]:
        """Return the stored value and mark it recently used, or None on a miss."""
        entry = self._entries.get(key)
        if entry is None:
            return None
        entry.hits += 1
        self._entries.move_to_end(key)
        return entry.value

    def set(self, key: str, value: Any) -> None:
        """Store value under key, evicting the oldest entry when full."""
        if key not in self._entries and len(self._entries) >= self._max_size:
            evicted, _ = self._entries.popitem(last=False)
            logger.debug(f"Evicted {evicted} from cache")
        self._entries[key] = CacheEntry(value=value)
        self._entries.move_to_end(key)

    def get_or_build(self, key: str, factory: Callable[[], T]) -> T:
        """Return the value for key, calling factory once on a miss.

        Args:
            key: Cache key, e.g. ``codebook:mlc2-q-cb1``.
            factory: Zero-argument callable that builds the value.

        Returns:
            The stored value, or the freshly built one.
        """
        if key in self._entries:
            logger.debug(f"Cache hit for {key}")
            return self.get(key)

        logger.debug(f"Building {key}")
        value = factory()
        self.set(key, value)
        return value

    def hits(self, key: str) -> int:
        """Times key was served from the cache; 0 when absent."""
        entry = self._entries.get(key)
        return 0 if entry is None else entry.hits

    def delete(self, key: str) -> None:
        self._entries.pop(key, None)

    def clear(self) -> None:
        self._entries.clear()

    def clear_by_prefix(self, prefix: str) -> List[str]:
        """Drop every entry of one kind, e.g. ``"codebook:"``.

        Returns:
            The removed keys.
        """
        removed = [key for key in self._entries if key.startswith(prefix)]
        for key in removed:
            del self._entries[key]
        if removed:
            logger.debug(f"Cleared {len(removed)} {prefix!r} entries")
        return removed
