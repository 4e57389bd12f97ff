"""
Hybrid background subtraction: a mixture model supplies a background image
every `hybrid_update_interval` frames, and each frame is compared against
that image with the cheap difference pipeline. By default the mixture
learns from every frame; with `learn_every_frame` off it only sees the
refresh frames.
"""

from dataclasses import dataclass, field
from typing import List, Optional

from ..dataio.models import PixelBuffer
from .imaging import prepare, threshold_difference
from .models import BgsConfig, BgsWarmupError, BinaryMask, GrayBuffer
from .mog import MixtureEngine, create_mixture


@dataclass
class HybridModel:
    """Mixture model plus the background image cached at its last refresh."""
    mixture: MixtureEngine
    update_interval: int = 50
    blur_kernel: int = 5
    learn_every_frame: bool = True
    background: Optional[PixelBuffer] = None
    background_gray: Optional[GrayBuffer] = None
    last_refresh_index: Optional[int] = None
    refresh_indices: List[int] = field(default_factory=list)
    frames_offered: int = 0

    @classmethod
    def from_config(cls, config: BgsConfig) -> "HybridModel":
        return cls(
            mixture=create_mixture(config),
            update_interval=config.hybrid_update_interval,
            blur_kernel=config.blur_kernel,
            learn_every_frame=config.hybrid_learn_every_frame,
        )

    def refresh_due(self, frame_index: int) -> bool:
        return self.last_refresh_index is None or frame_index - self.last_refresh_index >= self.update_interval


def hybrid_update(model: HybridModel, frame: PixelBuffer, frame_index: Optional[int] = None) -> bool:
    """Feed a frame to the mixture and refresh the cached background when an epoch starts.

    Returns:
        True if the cached background was refreshed with this frame
    """
    index = frame_index if frame_index is not None else model.frames_offered
    model.frames_offered += 1
    due = model.refresh_due(index)
    if model.learn_every_frame or due:
        model.mixture.update(frame)
    if not due:
        return False

    model.background = model.mixture.background()
    model.background_gray = prepare(model.background, model.blur_kernel)
    model.last_refresh_index = index
    model.refresh_indices.append(index)
    return True


def hybrid_mask(model: HybridModel, frame: PixelBuffer, config: BgsConfig) -> BinaryMask:
    """Difference mask of a frame against the background of the latest refresh.

    Raises:
        BgsWarmupError: If the model has never been refreshed
        DimensionMismatchError: If the frame size differs from the model
    """
    if model.background_gray is None:
        raise BgsWarmupError("Hybrid model has not been refreshed yet")
    return threshold_difference(model.background_gray, prepare(frame, config.blur_kernel), config.diff_threshold)
