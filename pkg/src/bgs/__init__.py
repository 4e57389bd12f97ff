"""Background subtraction: moving average, mixture of Gaussians and hybrid."""

from .models import BgsConfig, BgsMethod, BgsError, BgsWarmupError, DimensionMismatchError, BinaryMask, GrayBuffer
from .imaging import to_gray, blur, difference_mask, threshold_difference
from .ptp import MovingAverageModel, ptp_update, ptp_mask
from .mog import (
    MixtureEngine, ReferenceMixture, OpenCVMixture, create_mixture, mog_update, mog_mask, mog_background,
    startup_learning_rate,
)
from .hybrid import HybridModel, hybrid_update, hybrid_mask
from .subtractor import BackgroundSubtractor, create_subtractor, MaskDumper

__all__ = [
    "BgsConfig", "BgsMethod", "BgsError", "BgsWarmupError", "DimensionMismatchError", "BinaryMask", "GrayBuffer",
    "to_gray", "blur", "difference_mask", "threshold_difference",
    "MovingAverageModel", "ptp_update", "ptp_mask",
    "MixtureEngine", "ReferenceMixture", "OpenCVMixture", "create_mixture", "mog_update", "mog_mask",
    "mog_background", "startup_learning_rate",
    "HybridModel", "hybrid_update", "hybrid_mask",
    "BackgroundSubtractor", "create_subtractor", "MaskDumper",
]
