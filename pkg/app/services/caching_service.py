import logging
import threading
from collections import OrderedDict
from typing import List, Optional, Sequence

from app.utils.tensors import TensorAtPoint

logger = logging.getLogger(__name__)


class CachingService:
    """
    In-memory LRU cache for curvature series with a consistent key schema.
    Safe to share between the worker threads of one run.
    """

    def __init__(self, max_entries: int = 256):
        self.max_entries = max_entries
        self._entries: "OrderedDict[str, List[TensorAtPoint]]" = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    @staticmethod
    def _key_curvature_series(metric_key: str, point: Sequence[float], order: int) -> str:
        coords = ",".join(repr(float(c)) for c in point)
        return f"curv:metric:{metric_key}:point:{coords}:order:{order}"

    def get_cached_curvature_series(
        self, metric_key: str, point: Sequence[float], order: int
    ) -> Optional[List[TensorAtPoint]]:
        """Return the cached series if one of at least ``order`` terms exists."""
        if self.max_entries == 0:
            return None
        with self._lock:
            for cached_order in range(order, order + 6):
                key = self._key_curvature_series(metric_key, point, cached_order)
                if key in self._entries:
                    self._entries.move_to_end(key)
                    self.hits += 1
                    return self._entries[key][: order + 1]
            self.misses += 1
            return None

    def set_cached_curvature_series(
        self, metric_key: str, point: Sequence[float], order: int, series: List[TensorAtPoint]
    ) -> None:
        if self.max_entries == 0:
            return
        key = self._key_curvature_series(metric_key, point, order)
        with self._lock:
            self._entries[key] = list(series)
            self._entries.move_to_end(key)
            while len(self._entries) > self.max_entries:
                evicted, _ = self._entries.popitem(last=False)
                logger.debug(f"Evicted curvature cache entry {evicted}")

    def clear(self) -> int:
        with self._lock:
            count = len(self._entries)
            self._entries.clear()
            return count
