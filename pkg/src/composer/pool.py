"""
Pending-crop pool shared by the stream producers and the composer.
"""

import bisect
import threading
from typing import Iterable, List, Optional

from ..extract.models import ObjectCrop
from ..utils.logging import get_logger

logger = get_logger(__name__)


class CropPool:
    """Crops waiting for composition, kept in arrival_seq order.

    Multiple producers enqueue; a single consumer takes and returns crops.
    When the pool exceeds its capacity the oldest crops are dropped and
    counted.
    """

    def __init__(self, capacity: int = 1024):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.dropped = 0
        self._seqs: List[int] = []
        self._crops: List[ObjectCrop] = []
        self._cond = threading.Condition()

    def __len__(self) -> int:
        with self._cond:
            return len(self._crops)

    def _insert(self, crop: ObjectCrop) -> None:
        pos = bisect.bisect_right(self._seqs, crop.arrival_seq)
        self._seqs.insert(pos, crop.arrival_seq)
        self._crops.insert(pos, crop)

    def _shed(self) -> int:
        excess = len(self._crops) - self.capacity
        if excess <= 0:
            return 0
        del self._seqs[:excess]
        del self._crops[:excess]
        self.dropped += excess
        logger.warning(
            f"Crop pool over capacity, dropped {excess} oldest crops",
            extra={'event_type': 'pool_overflow', 'dropped': excess, 'dropped_total': self.dropped}
        )
        return excess

    def enqueue(self, crop: ObjectCrop) -> int:
        """Add a crop; returns the number of crops dropped to stay within capacity."""
        with self._cond:
            self._insert(crop)
            dropped = self._shed()
            self._cond.notify_all()
            return dropped

    def enqueue_many(self, crops: Iterable[ObjectCrop]) -> int:
        with self._cond:
            for crop in crops:
                self._insert(crop)
            dropped = self._shed()
            self._cond.notify_all()
            return dropped

    def snapshot(self) -> List[ObjectCrop]:
        """Current content in FCFS order."""
        with self._cond:
            return list(self._crops)

    def take_all(self) -> List[ObjectCrop]:
        """Remove and return every crop in FCFS order."""
        with self._cond:
            crops = self._crops
            self._crops, self._seqs = [], []
            return crops

    def restore(self, crops: Iterable[ObjectCrop]) -> None:
        """Return unplaced crops; their arrival_seq puts them back at the head."""
        with self._cond:
            for crop in crops:
                self._insert(crop)
            self._cond.notify_all()

    def wait_for_crops(self, timeout: Optional[float] = None, more_than: int = 0) -> bool:
        """Block until the pool holds more than `more_than` crops or the timeout elapses."""
        with self._cond:
            return self._cond.wait_for(lambda: len(self._crops) > more_than, timeout=timeout)

    def distinct_frames(self) -> int:
        with self._cond:
            return len({c.frame_key for c in self._crops})


def enqueue(pool: CropPool, crop: ObjectCrop) -> CropPool:
    """Add a crop to the pool (FCFS by arrival_seq)."""
    pool.enqueue(crop)
    return pool
