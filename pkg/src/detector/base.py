"""
Detector contract.
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from ..composer.models import CompositeFrame
from ..dataio.models import PixelBuffer
from .models import Detection


@dataclass
class DetectorStats:
    """Calls made, request timeouts and failures by error type."""
    calls: int = 0
    timeouts: int = 0
    failures: Dict[str, int] = field(default_factory=dict)

    def record_failure(self, error: Exception) -> None:
        name = type(error).__name__
        self.failures[name] = self.failures.get(name, 0) + 1

    @property
    def failed(self) -> int:
        return sum(self.failures.values())


class Detector(ABC):
    """Runs detection on square model inputs of ``input_side`` pixels."""

    def __init__(self, input_side: int):
        self.input_side = input_side
        self.stats = DetectorStats()

    def open(self) -> None:
        """Acquire resources (connections). No-op by default."""

    def close(self) -> None:
        """Release resources. No-op by default."""

    def __enter__(self) -> "Detector":
        self.open()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        self.close()

    @abstractmethod
    def detect(self, model_input: PixelBuffer, composite: Optional[CompositeFrame] = None) -> List[Detection]:
        """Detections in model-input coordinates."""
