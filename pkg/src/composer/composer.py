"""
Composition: choose crops from the pool under a policy, pack them and
paint the composite canvas.
"""

import threading
from pathlib import Path
from typing import List, Optional, Tuple, Union

import cv2
import orjson

from ..dataio.frames import write_frame
from ..dataio.models import BoundingBox, FrameRecord, PixelBuffer
from ..extract.models import ObjectCrop
from ..utils.logging import get_logger
from .models import (
    ComposeStats, CompositeFrame, CompositionPolicy, DownscaleLimit, Elastic, PackResult, Placement,
)
from .packing import _fits, pack, pack_alone
from .pool import CropPool

logger = get_logger(__name__)


def _select_downscale(
    crops: List[ObjectCrop], policy: DownscaleLimit, border: int, step: int
) -> Tuple[PackResult, List[ObjectCrop], bool]:
    limit = policy.side_limit
    if not _fits(crops[0], border, limit):
        return pack_alone(crops[0], border), crops[1:], True

    # Longest FCFS prefix that packs without leftovers
    best = pack(crops[:1], border, limit, step)
    taken = 1
    for k in range(2, len(crops) + 1):
        result = pack(crops[:k], border, limit, step)
        if result.leftover:
            break
        best, taken = result, k
    return best, crops[taken:], False


def _select_elastic(
    crops: List[ObjectCrop], policy: Elastic, border: int, step: int
) -> Tuple[PackResult, List[ObjectCrop]]:
    keys = set()
    chosen, rest = [], []
    for crop in crops:
        if crop.frame_key in keys:
            chosen.append(crop)
        elif len(keys) < policy.max_frames:
            keys.add(crop.frame_key)
            chosen.append(crop)
        else:
            rest.append(crop)
    return pack(chosen, border, None, step), rest


def render(result: PackResult) -> PixelBuffer:
    """Black square canvas with every placed crop blitted in."""
    canvas = PixelBuffer.blank(result.canvas_side, result.canvas_side)
    for p in result.placements:
        b = p.composite_box
        canvas.data[b.y:b.bottom, b.x:b.right] = p.crop.pixels.data
    return canvas


def compose(
    pool: CropPool,
    policy: CompositionPolicy,
    border: int = 2,
    composition_id: int = 0,
    step: int = 32,
) -> Tuple[Optional[CompositeFrame], CropPool]:
    """Build one composite from the head of the pool.

    Placed crops leave the pool; candidates that were not placed go back
    to its head.

    Returns:
        (composite or None when the pool is empty, the pool)
    """
    crops = pool.take_all()
    if not crops:
        return None, pool

    oversized = False
    if isinstance(policy, DownscaleLimit):
        result, rest, oversized = _select_downscale(crops, policy, border, step)
    else:
        result, rest = _select_elastic(crops, policy, border, step)
    pool.restore(rest + result.leftover)

    if oversized:
        logger.info(
            "Crop exceeds the downscale limit, composing it alone",
            extra={
                'event_type': 'oversized_crop',
                'stream_id': crops[0].stream_id,
                'frame_index': crops[0].frame_index,
                'canvas_side': result.canvas_side,
            }
        )

    composite = CompositeFrame(
        canvas=render(result),
        placements=result.placements,
        border_width=border,
        composition_id=composition_id,
        used_side=result.used_side,
    )
    return composite, pool


def resize_to_input(composite: CompositeFrame, input_side: int) -> PixelBuffer:
    """Bilinear resize of the canvas to the detector input.

    Records scale_factor = canvas_side / input_side on the composite.
    """
    if input_side < 1:
        raise ValueError("input_side must be >= 1")
    composite.scale_factor = composite.canvas_side / input_side
    if composite.canvas_side == input_side:
        return composite.canvas.copy()
    resized = cv2.resize(composite.canvas.data, (input_side, input_side), interpolation=cv2.INTER_LINEAR)
    return PixelBuffer(resized)


def full_frame_composite(frame: FrameRecord, composition_id: int, arrival_seq: int = 0) -> CompositeFrame:
    """Whole frame letterboxed onto a square black canvas (baseline input)."""
    pixels = frame.pixels
    box = BoundingBox(x=0, y=0, w=pixels.width, h=pixels.height)
    crop = ObjectCrop(
        stream_id=frame.stream_id,
        frame_index=frame.frame_index,
        scene_box=box,
        pixels=pixels,
        arrival_seq=arrival_seq,
    )
    side = max(pixels.width, pixels.height)
    canvas = PixelBuffer.blank(side, side)
    canvas.data[:pixels.height, :pixels.width] = pixels.data
    return CompositeFrame(
        canvas=canvas,
        placements=[Placement(crop=crop, composite_box=box)],
        border_width=0,
        composition_id=composition_id,
        used_side=side,
        full_frame=True,
    )


class CompositeDumper:
    """Writes each resized composite as <id>.png plus a <id>.json placement map."""

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)

    def dump(self, composite: CompositeFrame) -> Path:
        if composite.scale_factor is None:
            raise ValueError(f"Composite {composite.composition_id} has not been resized to the detector input")
        stem = f"composite_{composite.composition_id:06d}"
        image_path = write_frame(self.directory / f"{stem}.png", composite.canvas)
        (self.directory / f"{stem}.json").write_bytes(
            orjson.dumps(composite.sidecar(), option=orjson.OPT_INDENT_2)
        )
        return image_path


class Composer:
    """Owns the pool, the policy and the composition counter.

    Only one thread composes at a time; producers may enqueue concurrently.
    """

    def __init__(
        self,
        policy: CompositionPolicy,
        border: int = 2,
        pool_capacity: int = 1024,
        step: int = 32,
    ):
        self.policy = policy
        self.border = border
        self.step = step
        self.pool = CropPool(capacity=pool_capacity)
        self.stats = ComposeStats()
        self._next_id = 0
        self._lock = threading.Lock()
        self._stats_lock = threading.Lock()

    def _claim_id(self) -> int:
        composition_id = self._next_id
        self._next_id += 1
        return composition_id

    def enqueue(self, crops: List[ObjectCrop]) -> int:
        dropped = self.pool.enqueue_many(crops)
        if dropped:
            with self._stats_lock:
                self.stats.crops_dropped += dropped
        return dropped

    def ready(self) -> bool:
        """Whether the policy's grouping is complete for the pooled crops."""
        if isinstance(self.policy, Elastic):
            return self.pool.distinct_frames() >= self.policy.max_frames
        return len(self.pool) > 0

    def compose(self) -> Optional[CompositeFrame]:
        with self._lock:
            if len(self.pool) == 0:
                return None
            composite, _ = compose(self.pool, self.policy, self.border, self._claim_id(), self.step)
            self._record(composite)
            return composite

    def compose_full_frame(self, frame: FrameRecord) -> CompositeFrame:
        with self._lock:
            composite = full_frame_composite(frame, self._claim_id())
            self._record(composite)
            return composite

    def _record(self, composite: CompositeFrame) -> None:
        with self._stats_lock:
            self.stats.compositions += 1
            self.stats.crops_placed += len(composite.placements)
            self.stats.per_composition.append(len(composite.placements))
            if len(composite.placements) == 1 and not composite.full_frame and isinstance(self.policy, DownscaleLimit):
                if composite.canvas_side > self.policy.side_limit:
                    self.stats.oversized += 1
        logger.debug(
            f"Composite {composite.composition_id}: {len(composite.placements)} crops on {composite.canvas_side}px",
            extra={
                'event_type': 'composite_built',
                'composition_id': composite.composition_id,
                'crops': len(composite.placements),
                'frames': len(composite.frame_keys()),
                'canvas_side': composite.canvas_side,
            }
        )
