"""
Data models for frames, boxes and annotations.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class ClassLabel(str, Enum):
    """Closed set of object classes in the annotation files."""
    PERSON = "person"
    CAR = "car"
    VEHICLE = "vehicle"
    OBJECT = "object"
    BIKE = "bike"


# Annotation-file class codes 1..5, in order
CLASS_CODES = {
    1: ClassLabel.PERSON,
    2: ClassLabel.CAR,
    3: ClassLabel.VEHICLE,
    4: ClassLabel.OBJECT,
    5: ClassLabel.BIKE,
}
CODE_BY_CLASS = {label: code for code, label in CLASS_CODES.items()}


@dataclass
class PixelBuffer:
    """RGB raster, 8 bits per channel, stored as a (height, width, 3) uint8 array."""
    data: np.ndarray

    def __post_init__(self):
        if self.data.dtype != np.uint8:
            raise ValueError(f"PixelBuffer requires uint8 data, got {self.data.dtype}")
        if self.data.ndim != 3 or self.data.shape[2] != 3:
            raise ValueError(f"PixelBuffer requires shape (h, w, 3), got {self.data.shape}")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError("PixelBuffer width and height must be >= 1")

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def size(self) -> Tuple[int, int]:
        """(width, height)"""
        return self.width, self.height

    @classmethod
    def blank(cls, width: int, height: int) -> "PixelBuffer":
        """Black raster of the given size."""
        return cls(np.zeros((height, width, 3), dtype=np.uint8))

    @classmethod
    def filled(cls, width: int, height: int, value) -> "PixelBuffer":
        """Raster with every pixel set to `value` (scalar or RGB triple)."""
        data = np.empty((height, width, 3), dtype=np.uint8)
        data[...] = value
        return cls(data)

    def copy(self) -> "PixelBuffer":
        return PixelBuffer(self.data.copy())


@dataclass
class FrameRecord:
    """One decoded frame of a stream."""
    stream_id: str
    frame_index: int
    pixels: PixelBuffer

    @property
    def key(self) -> Tuple[str, int]:
        return self.stream_id, self.frame_index


class BoundingBox(BaseModel):
    """Axis-aligned box in integer pixel coordinates (x, y = top-left)."""

    model_config = ConfigDict(frozen=True)

    x: int = Field(..., ge=0, description="Left edge")
    y: int = Field(..., ge=0, description="Top edge")
    w: int = Field(..., ge=1, description="Width")
    h: int = Field(..., ge=1, description="Height")

    @property
    def right(self) -> int:
        """Exclusive right edge."""
        return self.x + self.w

    @property
    def bottom(self) -> int:
        """Exclusive bottom edge."""
        return self.y + self.h

    def area(self) -> int:
        return self.w * self.h

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return self.x, self.y, self.w, self.h

    def intersection(self, other: "BoundingBox") -> Optional["BoundingBox"]:
        """Overlapping region, or None when the boxes do not overlap."""
        x1 = max(self.x, other.x)
        y1 = max(self.y, other.y)
        x2 = min(self.right, other.right)
        y2 = min(self.bottom, other.bottom)
        if x2 <= x1 or y2 <= y1:
            return None
        return BoundingBox(x=x1, y=y1, w=x2 - x1, h=y2 - y1)

    def union(self, other: "BoundingBox") -> "BoundingBox":
        """Smallest box covering both."""
        x1 = min(self.x, other.x)
        y1 = min(self.y, other.y)
        x2 = max(self.right, other.right)
        y2 = max(self.bottom, other.bottom)
        return BoundingBox(x=x1, y=y1, w=x2 - x1, h=y2 - y1)

    def iou(self, other: "BoundingBox") -> float:
        """Intersection over union, in [0, 1]."""
        overlap = self.intersection(other)
        if overlap is None:
            return 0.0
        inter = overlap.area()
        return inter / (self.area() + other.area() - inter)

    def contains(self, other: "BoundingBox") -> bool:
        return (
            self.x <= other.x and self.y <= other.y
            and other.right <= self.right and other.bottom <= self.bottom
        )


class Annotation(BaseModel):
    """Ground-truth object box on one frame."""

    model_config = ConfigDict(frozen=True)

    stream_id: str
    frame_index: int = Field(..., ge=0)
    object_id: int
    class_label: ClassLabel
    box: BoundingBox
    duration: int = Field(default=0, description="Object duration column, carried through curation")

    @property
    def frame_key(self) -> Tuple[str, int]:
        return self.stream_id, self.frame_index


class DatasetConfig(BaseModel):
    """Frame sampling and curation settings."""

    skip: int = Field(default=10, description="Process every skip-th frame")
    warmup: int = Field(default=250, description="Leading frames excluded from evaluation")
    min_frames: int = Field(default=1000, description="Shorter sequences are excluded")
    lookback: int = Field(default=10, description="Frames back to compare a box against")
    static_fraction: float = Field(default=0.9, description="Static share at which an object is dropped")

    @field_validator("skip")
    @classmethod
    def validate_skip(cls, v: int) -> int:
        if v < 1:
            raise ValueError("skip must be >= 1")
        return v

    @field_validator("warmup", "min_frames")
    @classmethod
    def validate_non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError("warmup and min_frames must be non-negative")
        return v

    @model_validator(mode="after")
    def validate_curation(self) -> "DatasetConfig":
        if self.lookback <= 0:
            raise ValueError("lookback must be positive")
        if not 0.0 < self.static_fraction <= 1.0:
            raise ValueError("static_fraction must be in (0, 1]")
        return self
