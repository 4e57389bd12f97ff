"""
Synthetic scenes: bright rectangles moving over a dark static background,
written in the dataset layout with exact annotations.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Tuple, Union

import cv2
import numpy as np
from pydantic import BaseModel, Field, model_validator

from ..dataio.annotations import write_annotations
from ..dataio.frames import frame_filename, write_frame
from ..dataio.models import Annotation, BoundingBox, ClassLabel, PixelBuffer
from ..dataio.sequences import ANNOTATIONS_FILE, FRAMES_DIR
from ..extract.crops import clamp_box
from ..utils.logging import get_logger

logger = get_logger(__name__)


class SyntheticSpec(BaseModel):
    """Parameters of a generated dataset."""

    streams: int = Field(default=1, ge=1, description="Number of streams (seed + k each)")
    stream_prefix: str = Field(default="synth", description="Stream id prefix")
    frames: int = Field(default=500, ge=1)
    width: int = Field(default=640, ge=16)
    height: int = Field(default=480, ge=16)
    objects: int = Field(default=6, ge=0, description="Moving rectangles")
    min_size: int = Field(default=30, ge=1, description="Smallest rectangle side")
    max_size: int = Field(default=70, ge=1, description="Largest rectangle side")
    target_occupancy: Optional[float] = Field(
        default=None, gt=0, lt=1, description="Moving-object area fraction; overrides min/max size"
    )
    min_speed: int = Field(default=2, ge=0, description="Pixels per frame")
    max_speed: int = Field(default=6, ge=0, description="Pixels per frame")
    static_distractors: int = Field(default=0, ge=0, description="Annotated rectangles that never move")
    lanes: bool = Field(default=True, description="One horizontal band per object, so objects never overlap")
    exits: bool = Field(
        default=False,
        description="Objects leave the frame at the side they move toward and re-enter from the other side"
    )
    noise: int = Field(default=2, ge=0, le=32, description="Uniform per-pixel noise amplitude (gray levels)")
    seed: int = 0

    @model_validator(mode="after")
    def validate_ranges(self) -> "SyntheticSpec":
        if self.min_size > self.max_size:
            raise ValueError("min_size must be <= max_size")
        if self.min_speed > self.max_speed:
            raise ValueError("min_speed must be <= max_speed")
        return self

    def stream_id(self, k: int) -> str:
        return self.stream_prefix if self.streams == 1 else f"{self.stream_prefix}_{k:02d}"


@dataclass
class MovingRect:
    object_id: int
    class_label: ClassLabel
    color: Tuple[int, int, int]
    x: int
    y: int
    w: int
    h: int
    vx: int
    vy: int
    # Allowed vertical range (lanes)
    y_min: int
    y_max: int

    def advance(self, width: int, exits: bool = False) -> None:
        self.x += self.vx
        if exits:
            if self.x >= width:
                self.x = -self.w
            elif self.x + self.w <= 0:
                self.x = width
        elif self.x < 0 or self.x + self.w > width:
            self.vx = -self.vx
            self.x = min(max(self.x, 0), width - self.w)
        self.y += self.vy
        if self.y < self.y_min or self.y + self.h > self.y_max:
            self.vy = -self.vy
            self.y = min(max(self.y, self.y_min), self.y_max - self.h)

    def visible_box(self, width: int, height: int) -> Optional[BoundingBox]:
        return clamp_box(self.x, self.y, self.w, self.h, width, height)

    def annotated_box(self, width: int, height: int) -> Optional[BoundingBox]:
        """Box as written to annotation files: clipped at the frame origin only,
        so an object leaving on the right keeps its full extent."""
        if self.visible_box(width, height) is None:
            return None
        x = max(self.x, 0)
        return BoundingBox(x=x, y=self.y, w=self.x + self.w - x, h=self.h)


def _background(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    # Smooth dark texture, gray levels 40..80
    coarse = rng.integers(40, 81, size=(max(2, spec.height // 32), max(2, spec.width // 32)), dtype=np.uint8)
    gray = cv2.resize(coarse, (spec.width, spec.height), interpolation=cv2.INTER_LINEAR)
    return np.repeat(gray[:, :, None], 3, axis=2)


def _bright_color(rng: np.random.Generator) -> Tuple[int, int, int]:
    return tuple(int(c) for c in rng.integers(170, 256, size=3))


def _object_side(spec: SyntheticSpec, rng: np.random.Generator, band: int) -> Tuple[int, int]:
    if spec.target_occupancy is not None and spec.objects > 0:
        side = int(round(math.sqrt(spec.target_occupancy * spec.width * spec.height / spec.objects)))
        side = max(1, min(side, band, spec.width))
        return side, side
    w = int(rng.integers(spec.min_size, spec.max_size + 1))
    h = int(rng.integers(spec.min_size, spec.max_size + 1))
    return min(w, spec.width), min(h, band)


def _make_objects(spec: SyntheticSpec, rng: np.random.Generator) -> Tuple[List[MovingRect], List[MovingRect]]:
    labels = list(ClassLabel)
    total = spec.objects + spec.static_distractors
    band = spec.height // max(total, 1) if spec.lanes else spec.height
    moving, static = [], []
    for i in range(total):
        w, h = _object_side(spec, rng, band)
        y_min, y_max = (i * band, (i + 1) * band) if spec.lanes else (0, spec.height)
        x = int(rng.integers(0, spec.width - w + 1))
        y = int(rng.integers(y_min, y_max - h + 1))
        is_static = i >= spec.objects
        speed = 0 if is_static else int(rng.integers(spec.min_speed, spec.max_speed + 1))
        direction = 1 if rng.random() < 0.5 else -1
        vx = speed * direction
        vy = 0 if spec.lanes or is_static else int(rng.integers(-speed, speed + 1))
        rect = MovingRect(
            object_id=i + 1, class_label=labels[i % len(labels)], color=_bright_color(rng),
            x=x, y=y, w=w, h=h, vx=vx, vy=vy, y_min=y_min, y_max=y_max,
        )
        (static if is_static else moving).append(rect)
    return moving, static


def iter_frames(spec: SyntheticSpec, stream_id: str, seed: int) -> Iterator[Tuple[int, PixelBuffer, List[Annotation]]]:
    """Render frames in memory: (frame_index, pixels, annotations of the frame)."""
    rng = np.random.default_rng(seed)
    background = _background(spec, rng)
    moving, static = _make_objects(spec, rng)
    rects = moving + static

    for index in range(spec.frames):
        frame = background.copy()
        annotations = []
        for rect in rects:
            visible = rect.visible_box(spec.width, spec.height)
            if visible is None:
                continue
            frame[visible.y:visible.bottom, visible.x:visible.right] = rect.color
            annotations.append(Annotation(
                stream_id=stream_id, frame_index=index, object_id=rect.object_id,
                class_label=rect.class_label, box=rect.annotated_box(spec.width, spec.height),
                duration=spec.frames,
            ))
        if spec.noise:
            jitter = rng.integers(-spec.noise, spec.noise + 1, size=frame.shape, dtype=np.int16)
            frame = np.clip(frame.astype(np.int16) + jitter, 0, 255).astype(np.uint8)
        yield index, PixelBuffer(frame), annotations
        for rect in moving:
            rect.advance(spec.width, spec.exits)


def generate_stream(spec: SyntheticSpec, stream_dir: Union[str, Path], stream_id: str, seed: int) -> List[Annotation]:
    """Write one stream's frames and annotations; returns the annotations."""
    stream_dir = Path(stream_dir)
    annotations: List[Annotation] = []
    for index, pixels, frame_annotations in iter_frames(spec, stream_id, seed):
        write_frame(stream_dir / FRAMES_DIR / frame_filename(index, ".png"), pixels)
        annotations.extend(frame_annotations)
    write_annotations(stream_dir / ANNOTATIONS_FILE, annotations)
    return annotations


def gen_synthetic(spec: SyntheticSpec, root: Union[str, Path]) -> Path:
    """Generate a dataset under root (<root>/<stream_id>/frames, annotations.txt).

    Output is fully determined by the scene description and its seed.
    """
    root = Path(root)
    for k in range(spec.streams):
        stream_id = spec.stream_id(k)
        annotations = generate_stream(spec, root / stream_id, stream_id, spec.seed + k)
        logger.info(
            f"Generated synthetic stream {stream_id}: {spec.frames} frames, {len(annotations)} boxes",
            extra={'event_type': 'synthetic_stream_generated', 'stream_id': stream_id}
        )
    return root
