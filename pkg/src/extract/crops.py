"""
Cutting object crops out of frames.
"""

import itertools
import threading
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

from ..dataio.frames import write_frame
from ..dataio.models import Annotation, BoundingBox, PixelBuffer
from ..utils.logging import get_logger
from .models import CropStats, ObjectCrop

logger = get_logger(__name__)


class ArrivalCounter:
    """Monotone sequence shared by every stream of a run."""

    def __init__(self, start: int = 0):
        self._lock = threading.Lock()
        self._counter = itertools.count(start)

    def next(self) -> int:
        with self._lock:
            return next(self._counter)


def clamp_box(x: int, y: int, w: int, h: int, frame_width: int, frame_height: int) -> Optional[BoundingBox]:
    """Intersect a box with the frame; None when nothing is left."""
    x1, y1 = max(x, 0), max(y, 0)
    x2, y2 = min(x + w, frame_width), min(y + h, frame_height)
    if x2 <= x1 or y2 <= y1:
        return None
    return BoundingBox(x=x1, y=y1, w=x2 - x1, h=y2 - y1)


def crop_objects(
    frame: PixelBuffer,
    boxes: Iterable[BoundingBox],
    stream_id: str,
    frame_index: int,
    counter: ArrivalCounter,
    stats: Optional[CropStats] = None,
    object_ids: Optional[Sequence[Optional[int]]] = None,
) -> List[ObjectCrop]:
    """Pixel-exact crops of the frame, one per box, arrival_seq in box order.

    Boxes are clamped to the frame; boxes with nothing inside the frame are
    skipped and counted in `stats`.

    Args:
        frame: Source frame
        boxes: Boxes in scene coordinates
        stream_id: Stream of the frame
        frame_index: Index of the frame in its stream
        counter: Run-wide arrival counter
        stats: Optional counters updated in place
        object_ids: Optional ground-truth object id per box

    Returns:
        Crops in box order
    """
    stats = stats if stats is not None else CropStats()
    boxes = list(boxes)
    object_ids = list(object_ids) if object_ids is not None else [None] * len(boxes)

    crops = []
    for box, object_id in zip(boxes, object_ids):
        clamped = clamp_box(box.x, box.y, box.w, box.h, frame.width, frame.height)
        if clamped is None:
            stats.skipped_empty += 1
            continue
        pixels = PixelBuffer(frame.data[clamped.y:clamped.bottom, clamped.x:clamped.right].copy())
        crops.append(ObjectCrop(
            stream_id=stream_id,
            frame_index=frame_index,
            scene_box=clamped,
            pixels=pixels,
            arrival_seq=counter.next(),
            object_id=object_id,
        ))
        stats.crops += 1
    return crops


def crop_annotations(
    frame: PixelBuffer,
    annotations: Iterable[Annotation],
    counter: ArrivalCounter,
    stats: Optional[CropStats] = None,
) -> List[ObjectCrop]:
    """Crops cut from ground-truth boxes; each carries its object_id."""
    annotations = list(annotations)
    if not annotations:
        return []
    first = annotations[0]
    return crop_objects(
        frame,
        [a.box for a in annotations],
        stream_id=first.stream_id,
        frame_index=first.frame_index,
        counter=counter,
        stats=stats,
        object_ids=[a.object_id for a in annotations],
    )


def paste_crops(canvas: PixelBuffer, crops: Iterable[ObjectCrop]) -> PixelBuffer:
    """Paste crops back at their scene boxes (inverse of cropping)."""
    for crop in crops:
        b = crop.scene_box
        canvas.data[b.y:b.bottom, b.x:b.right] = crop.pixels.data
    return canvas


class CropDumper:
    """Writes crops as PNGs named <stream>_<frame>_<arrival_seq>.png."""

    def __init__(self, directory: Union[str, Path]):
        self.directory = Path(directory)

    def dump(self, crop: ObjectCrop) -> Path:
        name = f"{crop.stream_id}_{crop.frame_index:06d}_{crop.arrival_seq:08d}.png"
        return write_frame(self.directory / name, crop.pixels)
