"""
Ground-truth oracle detector.

Answers from curated annotations instead of pixels: every annotated object
that a placed crop covers is reported at its exact position in the model
input, then seeded perturbations (jitter, misses, false boxes) are applied.
"""

from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..composer.models import CompositeFrame, Placement
from ..dataio.models import Annotation, ClassLabel, PixelBuffer
from ..utils.logging import get_logger
from .base import Detector
from .models import Detection, MissingMetadataError, OracleConfig

logger = get_logger(__name__)

FrameIndex = Mapping[Tuple[str, int], Sequence[Annotation]]

SPURIOUS_SCORE = 0.5


def corresponding_annotations(placement: Placement, ground_truth: FrameIndex, min_coverage: float) -> List[Annotation]:
    """Annotations a placed crop stands for.

    A crop cut from an annotation yields only that object. Any other crop
    yields every annotation of its frame with at least `min_coverage` of its
    area inside the crop.
    """
    crop = placement.crop
    candidates = ground_truth.get(crop.frame_key, ())
    if crop.object_id is not None:
        return [a for a in candidates if a.object_id == crop.object_id]
    matched = []
    for a in candidates:
        overlap = a.box.intersection(crop.scene_box)
        if overlap is not None and overlap.area() >= min_coverage * a.box.area():
            matched.append(a)
    return matched


def map_to_input(annotation: Annotation, placement: Placement, scale_factor: float) -> Tuple[float, float, float, float]:
    """Scene box -> composite -> model input, clipped to the crop."""
    crop_box = placement.crop.scene_box
    clipped = annotation.box.intersection(crop_box)
    if clipped is None:
        return 0.0, 0.0, 0.0, 0.0
    cx = placement.composite_box.x + (clipped.x - crop_box.x)
    cy = placement.composite_box.y + (clipped.y - crop_box.y)
    return cx / scale_factor, cy / scale_factor, clipped.w / scale_factor, clipped.h / scale_factor


def _clip(x: float, y: float, w: float, h: float, side: int) -> Tuple[float, float, float, float]:
    x1, y1 = min(max(x, 0.0), side), min(max(y, 0.0), side)
    x2, y2 = min(max(x + w, 0.0), side), min(max(y + h, 0.0), side)
    return x1, y1, x2 - x1, y2 - y1


def oracle_detect(
    model_input: PixelBuffer,
    composite: Optional[CompositeFrame],
    ground_truth: FrameIndex,
    config: OracleConfig,
    rng: Optional[np.random.Generator] = None,
) -> List[Detection]:
    """Detections derived from ground truth for one model input.

    Args:
        model_input: Resized composite (only its size is used)
        composite: Composite with placements and scale_factor
        ground_truth: Curated annotations keyed by (stream_id, frame_index)
        config: Perturbation settings
        rng: Random generator; a fresh one seeded from config when omitted

    Returns:
        Detections in model-input coordinates, in placement order

    Raises:
        MissingMetadataError: If the composite or its scale factor is missing
    """
    if composite is None or composite.scale_factor is None:
        raise MissingMetadataError("Oracle detector needs the composite's placements and scale factor")
    rng = rng if rng is not None else np.random.default_rng(config.rng_seed)
    side = model_input.width
    scale = composite.scale_factor
    jitter = config.jitter_px + config.jitter_per_downscale * max(0.0, scale - 1.0)

    detections = []
    for placement in composite.placements:
        for annotation in corresponding_annotations(placement, ground_truth, config.min_coverage):
            x, y, w, h = map_to_input(annotation, placement, scale)
            if w <= 0 or h <= 0:
                continue
            if config.drop_rate > 0 and rng.random() < config.drop_rate:
                continue
            if min(w, h) < config.min_input_px:
                continue
            if jitter > 0:
                x += rng.uniform(-jitter, jitter)
                y += rng.uniform(-jitter, jitter)
            x, y, w, h = _clip(x, y, w, h, side)
            if w <= 0 or h <= 0:
                continue
            detections.append(Detection(x=x, y=y, w=w, h=h, class_label=annotation.class_label, score=1.0))

    if config.spurious_rate > 0 and rng.random() < config.spurious_rate:
        w = float(rng.uniform(side / 16, side / 4))
        h = float(rng.uniform(side / 16, side / 4))
        x = float(rng.uniform(0, side - w))
        y = float(rng.uniform(0, side - h))
        labels = list(ClassLabel)
        label = labels[int(rng.integers(len(labels)))]
        detections.append(Detection(x=x, y=y, w=w, h=h, class_label=label, score=SPURIOUS_SCORE))

    return detections


class OracleDetector(Detector):
    """Detector backed by curated annotations; one seeded generator per run."""

    def __init__(self, input_side: int, ground_truth: FrameIndex, config: Optional[OracleConfig] = None):
        super().__init__(input_side)
        self.config = config or OracleConfig()
        self.ground_truth: Dict[Tuple[str, int], Sequence[Annotation]] = dict(ground_truth)
        self._rng = np.random.default_rng(self.config.rng_seed)

    def detect(self, model_input: PixelBuffer, composite: Optional[CompositeFrame] = None) -> List[Detection]:
        self.stats.calls += 1
        return oracle_detect(model_input, composite, self.ground_truth, self.config, self._rng)
