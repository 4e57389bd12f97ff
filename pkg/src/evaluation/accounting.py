"""
Inference accounting: camera frames processed per detector call.
"""

import threading
from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, List, Set, Tuple

FrameKey = Tuple[str, int]


@dataclass(frozen=True)
class RunLogEntry:
    """One detector call and the camera frames its input carried."""
    composition_id: int
    frames: FrozenSet[FrameKey]
    crops: int


@dataclass
class RunLog:
    """Detector calls of a run plus every frame that reached extraction."""
    entries: List[RunLogEntry] = field(default_factory=list)
    frames_processed: Set[FrameKey] = field(default_factory=set)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def record_frame(self, key: FrameKey) -> None:
        with self._lock:
            self.frames_processed.add(key)

    def record_call(self, composition_id: int, frames: Iterable[FrameKey], crops: int) -> None:
        with self._lock:
            self.entries.append(RunLogEntry(composition_id, frozenset(frames), crops))


@dataclass(frozen=True)
class InferenceAccounting:
    inference_count: int
    frames_processed: int
    reduction_factor: float


def inference_accounting(run_log: RunLog) -> InferenceAccounting:
    """reduction_factor = camera frames processed / detector calls.

    Frames processed are those that reached extraction; with no calls the
    factor is 0.
    """
    calls = len(run_log.entries)
    frames = len(run_log.frames_processed)
    return InferenceAccounting(
        inference_count=calls,
        frames_processed=frames,
        reduction_factor=frames / calls if calls else 0.0,
    )
