"""
Detection and extraction metrics.

Detection matching follows PASCAL VOC: predictions sorted by descending
score are greedily matched, within the same frame and class, to the
unmatched ground-truth box of highest IoU at or above the threshold.
AP is the area under the all-points interpolated precision envelope.
"""

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..backmap.translate import SceneDetection
from ..dataio.models import Annotation, BoundingBox


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; 0 when disjoint."""
    return a.iou(b)


@dataclass
class FlaggedPrediction:
    """A prediction with its match outcome."""
    detection: SceneDetection
    is_tp: bool
    matched_object_id: Optional[int] = None

    @property
    def score(self) -> float:
        return self.detection.score


@dataclass
class MatchResult:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    flagged: List[FlaggedPrediction] = field(default_factory=list)


def match_detections(
    predictions: Iterable[SceneDetection],
    ground_truths: Iterable[Annotation],
    iou_threshold: float = 0.3,
) -> MatchResult:
    """Greedy-by-score matching scoped per (stream_id, frame_index, class).

    Returns:
        Counts and the predictions flagged TP/FP, in descending score order
    """
    scoped: Dict[Tuple, List[Annotation]] = defaultdict(list)
    total_gt = 0
    for g in ground_truths:
        scoped[(g.stream_id, g.frame_index, g.class_label)].append(g)
        total_gt += 1
    used: Dict[Tuple, List[bool]] = {k: [False] * len(v) for k, v in scoped.items()}

    ordered = sorted(predictions, key=lambda d: -d.score)
    result = MatchResult()
    for pred in ordered:
        key = (pred.stream_id, pred.frame_index, pred.class_label)
        candidates = scoped.get(key, [])
        best, best_iou = -1, iou_threshold
        for i, g in enumerate(candidates):
            if used[key][i]:
                continue
            overlap = iou(pred.box, g.box)
            if overlap >= best_iou and (best < 0 or overlap > best_iou):
                best, best_iou = i, overlap
        if best >= 0:
            used[key][best] = True
            result.tp += 1
            result.flagged.append(FlaggedPrediction(pred, True, candidates[best].object_id))
        else:
            result.fp += 1
            result.flagged.append(FlaggedPrediction(pred, False))
    result.fn = total_gt - result.tp
    return result


def average_precision(flagged: Sequence[FlaggedPrediction], total_gt: int) -> Optional[float]:
    """All-points interpolated AP.

    Returns:
        AP in [0, 1], or None when there is no ground truth
    """
    if total_gt <= 0:
        return None
    if not flagged:
        return 0.0
    order = np.argsort([-f.score for f in flagged], kind="stable")
    tp = np.array([flagged[i].is_tp for i in order], dtype=np.float64)
    fp = 1.0 - tp
    tp_cum = np.cumsum(tp)
    fp_cum = np.cumsum(fp)
    rec = tp_cum / float(total_gt)
    prec = tp_cum / np.maximum(tp_cum + fp_cum, np.finfo(np.float64).eps)

    # Sentinels, then the precision envelope
    mrec = np.concatenate(([0.0], rec, [1.0]))
    mpre = np.concatenate(([0.0], prec, [0.0]))
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = max(mpre[i - 1], mpre[i])

    # Sum (delta recall) * precision where recall changes
    i = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[i + 1] - mrec[i]) * mpre[i + 1]))


@dataclass
class PixelScore:
    """Pixel-level extraction quality on one or more frames."""
    intersection: int = 0
    extracted: int = 0
    ground_truth: int = 0

    @property
    def zero_extraction(self) -> bool:
        return self.extracted == 0

    @property
    def zero_ground_truth(self) -> bool:
        return self.ground_truth == 0

    @property
    def precision(self) -> float:
        return 1.0 if self.extracted == 0 else self.intersection / self.extracted

    @property
    def recall(self) -> float:
        return 1.0 if self.ground_truth == 0 else self.intersection / self.ground_truth

    def __add__(self, other: "PixelScore") -> "PixelScore":
        return PixelScore(
            self.intersection + other.intersection,
            self.extracted + other.extracted,
            self.ground_truth + other.ground_truth,
        )


def rasterize(boxes: Iterable[BoundingBox], width: int, height: int) -> np.ndarray:
    """Pixel-set union of boxes on a width x height grid."""
    grid = np.zeros((height, width), dtype=bool)
    for b in boxes:
        grid[b.y:min(b.bottom, height), b.x:min(b.right, width)] = True
    return grid


def pixel_precision_recall(
    extracted_boxes: Iterable[BoundingBox],
    gt_boxes: Iterable[BoundingBox],
    frame_dims: Tuple[int, int],
) -> PixelScore:
    """Share of extracted pixels that are object pixels, and of object pixels extracted.

    Args:
        extracted_boxes: Boxes produced by extraction
        gt_boxes: Ground-truth boxes of the same frame
        frame_dims: (width, height)

    Returns:
        PixelScore; precision is 1.0 with `zero_extraction` set when nothing
        was extracted, recall is 1.0 with `zero_ground_truth` set when there
        is no ground truth
    """
    width, height = frame_dims
    extracted = rasterize(extracted_boxes, width, height)
    truth = rasterize(gt_boxes, width, height)
    return PixelScore(
        intersection=int(np.count_nonzero(extracted & truth)),
        extracted=int(np.count_nonzero(extracted)),
        ground_truth=int(np.count_nonzero(truth)),
    )
