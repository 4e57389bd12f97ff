"""
Background subtraction configuration and raster types.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, field_validator

from ..core.errors import FomoError


class BgsMethod(str, Enum):
    """Background subtraction methods."""
    PTP_MEAN = "ptp_mean"
    MOG2 = "mog2"
    HYBRID = "hybrid"


class BgsError(FomoError):
    """Base exception for background subtraction errors."""
    pass


class BgsWarmupError(BgsError):
    """The background model has not seen enough frames to produce a mask."""
    pass


class DimensionMismatchError(BgsError):
    """A frame does not match the dimensions of the stream's background model."""
    pass


@dataclass
class GrayBuffer:
    """Single-channel 8-bit raster, shape (height, width)."""
    data: np.ndarray

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def height(self) -> int:
        return int(self.data.shape[0])


@dataclass
class BinaryMask:
    """Foreground mask, shape (height, width), True = foreground."""
    data: np.ndarray

    def __post_init__(self):
        if self.data.dtype != np.bool_:
            self.data = self.data.astype(bool)

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    def count(self) -> int:
        return int(self.data.sum())

    def to_image(self) -> np.ndarray:
        """Monochrome uint8 image (255 = foreground) for dumping."""
        return self.data.astype(np.uint8) * 255


class BgsConfig(BaseModel):
    """Background subtraction settings."""

    method: BgsMethod = Field(default=BgsMethod.MOG2, description="Subtraction method")
    blur_kernel: int = Field(default=5, description="Gaussian blur kernel side (odd)")
    diff_threshold: int = Field(default=30, description="Absolute difference above which a pixel is foreground")
    hybrid_update_interval: int = Field(default=50, description="Frames between background image refreshes in hybrid mode")
    hybrid_learn_every_frame: bool = Field(
        default=True,
        description="Feed every frame to the hybrid mixture; when false it only sees refresh frames"
    )

    # Moving average (PtP mean)
    ptp_window: int = Field(default=20, description="Sampled frames kept in the moving average")
    ptp_sample_skip: int = Field(default=10, description="Frames between moving-average samples")

    # Mixture of Gaussians
    mog_engine: Literal["reference", "opencv"] = Field(
        default="opencv",
        description="Mixture implementation: the numpy reference model or OpenCV's MOG2"
    )
    mog_components: int = Field(default=5, description="Gaussian components per pixel")
    mog_learning_rate: float = Field(default=0.005, description="Steady-state learning rate")
    mog_background_ratio: float = Field(default=0.9, description="Weight share treated as background")
    mog_match_threshold: float = Field(default=2.5, description="Match distance in standard deviations")
    mog_initial_variance: float = Field(default=225.0, description="Variance of new components")
    mog_variance_floor: float = Field(default=4.0, description="Lower bound on component variance")

    @field_validator("blur_kernel")
    @classmethod
    def validate_blur_kernel(cls, v: int) -> int:
        if v < 1 or v % 2 == 0:
            raise ValueError("blur_kernel must be odd and >= 1")
        return v

    @field_validator("diff_threshold")
    @classmethod
    def validate_diff_threshold(cls, v: int) -> int:
        if not 1 <= v <= 255:
            raise ValueError("diff_threshold must be in [1, 255]")
        return v

    @field_validator("hybrid_update_interval", "ptp_window", "ptp_sample_skip", "mog_components")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("mog_learning_rate", "mog_background_ratio")
    @classmethod
    def validate_ratio(cls, v: float) -> float:
        if not 0.0 < v <= 1.0:
            raise ValueError("must be in (0, 1]")
        return v

    @field_validator("mog_match_threshold", "mog_initial_variance", "mog_variance_floor")
    @classmethod
    def validate_positive_float(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("must be positive")
        return v
