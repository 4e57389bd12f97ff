"""
Object crops and extraction settings.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

from pydantic import BaseModel, Field, field_validator

from ..dataio.models import BoundingBox, PixelBuffer


@dataclass
class ObjectCrop:
    """A region cut from a scene frame, with its provenance.

    `arrival_seq` is unique across all streams of a run and orders crops for
    first-come-first-served composition. `object_id` is set only for crops
    cut from ground-truth annotations.
    """
    stream_id: str
    frame_index: int
    scene_box: BoundingBox
    pixels: PixelBuffer
    arrival_seq: int
    object_id: Optional[int] = None

    def __post_init__(self):
        if (self.pixels.width, self.pixels.height) != (self.scene_box.w, self.scene_box.h):
            raise ValueError(
                f"Crop pixels {self.pixels.width}x{self.pixels.height} do not match "
                f"scene box {self.scene_box.w}x{self.scene_box.h}"
            )

    @property
    def frame_key(self) -> Tuple[str, int]:
        return self.stream_id, self.frame_index

    @property
    def width(self) -> int:
        return self.scene_box.w

    @property
    def height(self) -> int:
        return self.scene_box.h


@dataclass
class CropStats:
    """Counters kept while cutting crops."""
    crops: int = 0
    skipped_empty: int = 0


class ExtractConfig(BaseModel):
    """Box filtering settings."""

    min_area: int = Field(default=400, description="Boxes with a smaller area (px^2) are discarded")
    merge_iou: float = Field(default=0.0, description="Boxes with a larger pairwise IoU are merged")
    source: str = Field(default="bgs", description="Crop source: 'bgs' masks or 'gt' annotations")

    @field_validator("min_area")
    @classmethod
    def validate_min_area(cls, v: int) -> int:
        if v < 0:
            raise ValueError("min_area must be non-negative")
        return v

    @field_validator("merge_iou")
    @classmethod
    def validate_merge_iou(cls, v: float) -> float:
        if not 0.0 <= v < 1.0:
            raise ValueError("merge_iou must be in [0, 1)")
        return v

    @field_validator("source")
    @classmethod
    def validate_source(cls, v: str) -> str:
        if v not in ("bgs", "gt"):
            raise ValueError("source must be 'bgs' or 'gt'")
        return v
