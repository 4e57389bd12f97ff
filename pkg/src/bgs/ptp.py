"""
Moving-average ("PtP mean") background model.

The background is the per-pixel mean of the last `window` sampled frames.
A frame is sampled when at least `sample_skip` frames have passed since the
previous sample.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Optional

import numpy as np

from ..dataio.models import PixelBuffer
from .imaging import difference_mask, round_to_pixels
from .models import BgsConfig, BgsWarmupError, BinaryMask, DimensionMismatchError


@dataclass
class MovingAverageModel:
    """Sliding window of sampled frames; the mean is taken over the window on each request."""
    window: int = 20
    sample_skip: int = 10
    samples: Deque[np.ndarray] = field(default_factory=deque)
    samples_taken: int = 0
    frames_offered: int = 0
    last_sample_index: Optional[int] = None

    @classmethod
    def from_config(cls, config: BgsConfig) -> "MovingAverageModel":
        return cls(window=config.ptp_window, sample_skip=config.ptp_sample_skip)

    @property
    def initialized(self) -> bool:
        return len(self.samples) > 0

    def mean(self) -> np.ndarray:
        if not self.initialized:
            raise BgsWarmupError("Moving-average model has no samples yet")
        return np.mean(self.samples, axis=0)

    def background(self) -> PixelBuffer:
        return round_to_pixels(self.mean())


def ptp_update(model: MovingAverageModel, frame: PixelBuffer, frame_index: Optional[int] = None) -> bool:
    """Offer a frame to the model.

    Args:
        model: Model updated in place
        frame: RGB frame
        frame_index: Position of the frame in its stream; an internal counter is used when omitted

    Returns:
        True if the frame was sampled into the window

    Raises:
        DimensionMismatchError: If the frame size differs from earlier samples
    """
    index = frame_index if frame_index is not None else model.frames_offered
    model.frames_offered += 1

    shape = model.samples[0].shape if model.samples else None
    if shape is not None and shape != frame.data.shape:
        raise DimensionMismatchError(
            f"Frame {frame.width}x{frame.height} does not match model "
            f"{shape[1]}x{shape[0]}"
        )

    due = model.last_sample_index is None or index - model.last_sample_index >= model.sample_skip
    if not due:
        return False

    model.samples.append(frame.data.copy())
    if len(model.samples) > model.window:
        model.samples.popleft()
    model.samples_taken += 1
    model.last_sample_index = index
    return True


def ptp_mask(model: MovingAverageModel, frame: PixelBuffer, config: BgsConfig) -> BinaryMask:
    """Foreground mask of a frame against the moving-average background.

    Raises:
        BgsWarmupError: If the model has no samples
        DimensionMismatchError: If the frame size differs from the model
    """
    return difference_mask(model.background(), frame, config.blur_kernel, config.diff_threshold)
