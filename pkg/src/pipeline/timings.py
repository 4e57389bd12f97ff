"""
Per-stage latency records.
"""

import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Union

import pandas as pd

COLUMNS = ["stage", "stream_id", "frame_index", "composition_id", "seconds"]


@dataclass(frozen=True)
class TimingRecord:
    stage: str
    seconds: float
    stream_id: Optional[str] = None
    frame_index: Optional[int] = None
    composition_id: Optional[int] = None


class StageTimings:
    """Thread-safe collector of stage durations (monotonic clock)."""

    def __init__(self):
        self._records: List[TimingRecord] = []
        self._lock = threading.Lock()

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def add(self, stage: str, seconds: float, **keys) -> None:
        if seconds < 0:
            raise ValueError("stage duration must be non-negative")
        with self._lock:
            self._records.append(TimingRecord(stage=stage, seconds=seconds, **keys))

    @contextmanager
    def timed(self, stage: str, **keys) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.add(stage, time.perf_counter() - start, **keys)

    def to_frame(self) -> pd.DataFrame:
        with self._lock:
            rows = [(r.stage, r.stream_id, r.frame_index, r.composition_id, r.seconds) for r in self._records]
        return pd.DataFrame(rows, columns=COLUMNS)

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame = self.to_frame()
        frame["ms"] = frame["seconds"] * 1000
        frame.drop(columns=["seconds"]).to_csv(path, index=False)
        return path
