"""
Composition policies, placements and composite frames.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple, Union

from pydantic import BaseModel, Field, field_validator

from ..core.errors import ConfigurationError
from ..dataio.models import BoundingBox, PixelBuffer
from ..extract.models import ObjectCrop


@dataclass(frozen=True)
class DownscaleLimit:
    """Canvas side capped at max_downscale * model_input."""
    max_downscale: float
    model_input: int

    def __post_init__(self):
        if self.max_downscale < 1.0:
            raise ConfigurationError("max_downscale must be >= 1")
        if self.model_input < 1:
            raise ConfigurationError("model_input must be >= 1")

    @property
    def side_limit(self) -> int:
        return int(self.max_downscale * self.model_input)

    def __str__(self) -> str:
        return f"downscale:{self.max_downscale:g}"


@dataclass(frozen=True)
class Elastic:
    """Crops from at most max_frames distinct camera frames per composition."""
    max_frames: int

    def __post_init__(self):
        if self.max_frames < 1:
            raise ConfigurationError("max_frames must be >= 1")

    def __str__(self) -> str:
        return f"elastic:{self.max_frames}"


CompositionPolicy = Union[DownscaleLimit, Elastic]


def parse_policy(text: str, model_input: int) -> CompositionPolicy:
    """Parse ``downscale:<factor>`` or ``elastic:<n>``.

    Raises:
        ConfigurationError: On an unknown variant or a bad parameter
    """
    kind, _, value = text.strip().partition(":")
    try:
        if kind == "downscale":
            return DownscaleLimit(max_downscale=float(value), model_input=model_input)
        if kind == "elastic":
            return Elastic(max_frames=int(value))
    except ValueError as e:
        raise ConfigurationError(f"Invalid policy parameter in {text!r}: {e}") from e
    raise ConfigurationError(f"Unknown composition policy {text!r} (expected downscale:<f> or elastic:<n>)")


@dataclass
class Placement:
    """A crop's position inside the canvas, border excluded."""
    crop: ObjectCrop
    composite_box: BoundingBox

    def inflated(self, border: int) -> Tuple[int, int, int, int]:
        """(x1, y1, x2, y2) of the placement grown by the border on every side."""
        b = self.composite_box
        return b.x - border, b.y - border, b.right + border, b.bottom + border


@dataclass
class PackResult:
    """Outcome of one packing pass."""
    placements: List[Placement]
    leftover: List[ObjectCrop]
    canvas_side: int
    used_side: int = 0


@dataclass
class CompositeFrame:
    """A square canvas holding one or more crops."""
    canvas: PixelBuffer
    placements: List[Placement]
    border_width: int
    composition_id: int
    scale_factor: Optional[float] = None
    used_side: int = 0
    full_frame: bool = False

    @property
    def canvas_side(self) -> int:
        return self.canvas.width

    def frame_keys(self) -> Set[Tuple[str, int]]:
        return {p.crop.frame_key for p in self.placements}

    def sidecar(self) -> Dict:
        """Placement map for dumps."""
        return {
            "composition_id": self.composition_id,
            "canvas_side": self.canvas_side,
            "scale_factor": self.scale_factor,
            "border_width": self.border_width,
            "placements": [
                {
                    "stream_id": p.crop.stream_id,
                    "frame_index": p.crop.frame_index,
                    "arrival_seq": p.crop.arrival_seq,
                    "scene_box": list(p.crop.scene_box.as_tuple()),
                    "composite_box": list(p.composite_box.as_tuple()),
                }
                for p in self.placements
            ],
        }


@dataclass
class ComposeStats:
    """Composer counters."""
    compositions: int = 0
    crops_placed: int = 0
    crops_dropped: int = 0
    oversized: int = 0
    per_composition: List[int] = field(default_factory=list)


class ComposerConfig(BaseModel):
    """Composition settings."""

    policy: str = Field(default="elastic:8", description="downscale:<factor> or elastic:<n>")
    input_side: int = Field(default=320, description="Detector input side (px)")
    border: int = Field(default=2, description="Blank margin around each crop (px)")
    pool_capacity: int = Field(default=1024, description="Pending crops kept before the oldest are dropped")
    canvas_step: int = Field(default=32, description="Canvas side quantization (px)")

    @field_validator("border")
    @classmethod
    def validate_border(cls, v: int) -> int:
        if v < 0:
            raise ValueError("border must be non-negative")
        return v

    @field_validator("input_side", "pool_capacity", "canvas_step")
    @classmethod
    def validate_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("policy")
    @classmethod
    def validate_policy(cls, v: str) -> str:
        parse_policy(v, model_input=1)
        return v

    def build_policy(self) -> CompositionPolicy:
        return parse_policy(self.policy, model_input=self.input_side)
