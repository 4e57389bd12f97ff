"""
Back-mapping of detections from model-input coordinates to scene coordinates.

Input -> canvas (x scale_factor) -> placement with the largest share of the
detection -> crop-local -> scene (+ crop origin). Coordinates stay
fractional until the final rounding (half up) of the scene box.
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Tuple, Union

import pandas as pd

from ..composer.models import CompositeFrame
from ..dataio.models import BoundingBox, ClassLabel
from ..detector.models import Detection
from ..utils.logging import get_logger

logger = get_logger(__name__)

CSV_COLUMNS = ["composition_id", "stream_id", "frame_index", "class", "score", "x", "y", "w", "h"]


@dataclass(frozen=True)
class SceneDetection:
    """A detection in the coordinates of its source frame."""
    stream_id: str
    frame_index: int
    box: BoundingBox
    class_label: ClassLabel
    score: float
    composition_id: int = -1

    @property
    def frame_key(self) -> Tuple[str, int]:
        return self.stream_id, self.frame_index


@dataclass
class BackmapStats:
    """Detections dropped while mapping back."""
    translated: int = 0
    discarded_low_overlap: int = 0
    discarded_no_placement: int = 0

    @property
    def discarded(self) -> int:
        return self.discarded_low_overlap + self.discarded_no_placement


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def _overlap(ax1, ay1, ax2, ay2, bx1, by1, bx2, by2) -> float:
    w = min(ax2, bx2) - max(ax1, bx1)
    h = min(ay2, by2) - max(ay1, by1)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def translate(
    detections: Iterable[Detection],
    composite: CompositeFrame,
    scale_factor: Optional[float] = None,
    min_overlap: float = 0.5,
    stats: Optional[BackmapStats] = None,
) -> List[SceneDetection]:
    """Map detections on a model input back to their scenes.

    Args:
        detections: Detections in model-input coordinates
        composite: Composite the input was resized from
        scale_factor: canvas_side / input_side (default: the composite's)
        min_overlap: Minimum share of the detection's area inside its placement
        stats: Optional counters updated in place

    Returns:
        Scene detections in input order; discarded detections are counted
    """
    stats = stats if stats is not None else BackmapStats()
    scale = scale_factor if scale_factor is not None else composite.scale_factor
    if scale is None or scale <= 0:
        raise ValueError("scale_factor must be positive")

    results = []
    for det in detections:
        if not composite.placements:
            stats.discarded_no_placement += 1
            continue
        x1, y1 = det.x * scale, det.y * scale
        x2, y2 = det.right * scale, det.bottom * scale
        area = (x2 - x1) * (y2 - y1)

        best_index, best_share = -1, 0.0
        for i, p in enumerate(composite.placements):
            b = p.composite_box
            share = _overlap(x1, y1, x2, y2, b.x, b.y, b.right, b.bottom) / area if area > 0 else 0.0
            if share > best_share:
                best_index, best_share = i, share
        if best_index < 0 or best_share < min_overlap:
            stats.discarded_low_overlap += 1
            continue

        placement = composite.placements[best_index]
        b = placement.composite_box
        scene = placement.crop.scene_box
        # Clip to the placement, then shift into scene coordinates
        cx1, cy1 = max(x1, b.x), max(y1, b.y)
        cx2, cy2 = min(x2, b.right), min(y2, b.bottom)
        sx1 = _round_half_up(cx1 - b.x + scene.x)
        sy1 = _round_half_up(cy1 - b.y + scene.y)
        sx2 = _round_half_up(cx2 - b.x + scene.x)
        sy2 = _round_half_up(cy2 - b.y + scene.y)

        # Inside the crop, hence inside the frame
        sx1, sx2 = min(max(sx1, scene.x), scene.right), min(max(sx2, scene.x), scene.right)
        sy1, sy2 = min(max(sy1, scene.y), scene.bottom), min(max(sy2, scene.y), scene.bottom)
        if sx2 - sx1 < 1 or sy2 - sy1 < 1:
            stats.discarded_low_overlap += 1
            continue

        results.append(SceneDetection(
            stream_id=placement.crop.stream_id,
            frame_index=placement.crop.frame_index,
            box=BoundingBox(x=sx1, y=sy1, w=sx2 - sx1, h=sy2 - sy1),
            class_label=det.class_label,
            score=det.score,
            composition_id=composite.composition_id,
        ))
        stats.translated += 1

    if stats.discarded:
        logger.debug(
            f"Back-mapping discarded {stats.discarded} detections so far",
            extra={'event_type': 'detections_discarded', 'composition_id': composite.composition_id}
        )
    return results


def write_scene_detections(path: Union[str, Path], detections: Iterable[SceneDetection]) -> Path:
    """Write detections as CSV (composition_id, stream_id, frame_index, class, score, x, y, w, h)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [
        (d.composition_id, d.stream_id, d.frame_index, d.class_label.value, d.score, *d.box.as_tuple())
        for d in detections
    ]
    pd.DataFrame(rows, columns=CSV_COLUMNS).to_csv(path, index=False, float_format="%.6f")
    return path


def read_scene_detections(path: Union[str, Path]) -> List[SceneDetection]:
    """Read a detections CSV written by write_scene_detections."""
    df = pd.read_csv(path, dtype={"stream_id": str}).rename(columns={"class": "class_label"})
    return [
        SceneDetection(
            stream_id=row.stream_id,
            frame_index=int(row.frame_index),
            box=BoundingBox(x=int(row.x), y=int(row.y), w=int(row.w), h=int(row.h)),
            class_label=ClassLabel(row.class_label),
            score=float(row.score),
            composition_id=int(row.composition_id),
        )
        for row in df.itertuples(index=False)
    ]
