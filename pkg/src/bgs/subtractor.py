"""
Per-stream background subtractors.

Each stream owns one subtractor. ``apply`` folds the frame into the model
and returns the foreground mask, or None while the model cannot yet produce
one (the first frame of a stream).
"""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, Optional, Type, Union

import cv2

from ..dataio.frames import frame_filename
from ..dataio.models import PixelBuffer
from ..utils.logging import get_logger
from .hybrid import HybridModel, hybrid_mask, hybrid_update
from .mog import create_mixture
from .models import BgsConfig, BgsMethod, BinaryMask
from .ptp import MovingAverageModel, ptp_mask, ptp_update

logger = get_logger(__name__)


class BackgroundSubtractor(ABC):
    """Background model of one stream."""

    method: BgsMethod

    def __init__(self, config: BgsConfig):
        self.config = config

    @abstractmethod
    def apply(self, frame: PixelBuffer, frame_index: int, extract: bool = True) -> Optional[BinaryMask]:
        """Update the model with a frame.

        Args:
            frame: RGB frame
            frame_index: Position of the frame in its stream
            extract: When False only the model is updated (warm-up)

        Returns:
            Foreground mask, or None when not extracting or while the model is empty
        """


class MovingAverageSubtractor(BackgroundSubtractor):
    method = BgsMethod.PTP_MEAN

    def __init__(self, config: BgsConfig):
        super().__init__(config)
        self.model = MovingAverageModel.from_config(config)

    def apply(self, frame, frame_index, extract=True):
        mask = None
        if extract and self.model.initialized:
            mask = ptp_mask(self.model, frame, self.config)
        ptp_update(self.model, frame, frame_index)
        return mask


class MixtureSubtractor(BackgroundSubtractor):
    method = BgsMethod.MOG2

    def __init__(self, config: BgsConfig):
        super().__init__(config)
        self.model = create_mixture(config)

    def apply(self, frame, frame_index, extract=True):
        if not extract or not self.model.initialized:
            self.model.update(frame)
            return None
        return self.model.segment(frame)


class HybridSubtractor(BackgroundSubtractor):
    method = BgsMethod.HYBRID

    def __init__(self, config: BgsConfig):
        super().__init__(config)
        self.model = HybridModel.from_config(config)

    def apply(self, frame, frame_index, extract=True):
        hybrid_update(self.model, frame, frame_index)
        if not extract:
            return None
        return hybrid_mask(self.model, frame, self.config)


SUBTRACTORS: Dict[BgsMethod, Type[BackgroundSubtractor]] = {
    BgsMethod.PTP_MEAN: MovingAverageSubtractor,
    BgsMethod.MOG2: MixtureSubtractor,
    BgsMethod.HYBRID: HybridSubtractor,
}


def create_subtractor(config: BgsConfig) -> BackgroundSubtractor:
    """Build the subtractor for ``config.method``."""
    return SUBTRACTORS[BgsMethod(config.method)](config)


class MaskDumper:
    """Writes masks as monochrome PNGs under <dir>/<stream_id>/."""

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)

    def dump(self, stream_id: str, frame_index: int, mask: BinaryMask) -> Path:
        path = self.directory / stream_id / frame_filename(frame_index, ".png")
        path.parent.mkdir(parents=True, exist_ok=True)
        cv2.imwrite(str(path), mask.to_image())
        return path
