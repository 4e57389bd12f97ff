"""
Evaluation report: detection metrics per class, pixel metrics, inference
accounting and per-stage latency.
"""

from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Set, Tuple

import orjson
import pandas as pd
from pydantic import BaseModel, Field, field_validator

from ..backmap.translate import SceneDetection
from ..dataio.models import Annotation
from ..utils.logging import get_logger
from .accounting import InferenceAccounting
from .metrics import PixelScore, average_precision, match_detections

logger = get_logger(__name__)


class EvalConfig(BaseModel):
    """Evaluation settings."""

    iou_threshold: float = Field(default=0.3, description="Minimum IoU for a true positive")

    @field_validator("iou_threshold")
    @classmethod
    def validate_iou_threshold(cls, v: float) -> float:
        if not 0.0 < v <= 1.0:
            raise ValueError("iou_threshold must be in (0, 1]")
        return v


class ClassMetrics(BaseModel):
    tp: int = 0
    fp: int = 0
    fn: int = 0
    precision: float = 0.0
    recall: float = 0.0
    ap: Optional[float] = None


class LatencySummary(BaseModel):
    count: int
    mean_ms: float
    p50_ms: float
    p99_ms: float


class EvalReport(BaseModel):
    """Outcome of a run or of an offline evaluation."""

    iou_threshold: float = 0.3
    classes: Dict[str, ClassMetrics] = Field(default_factory=dict)
    mean_ap: Optional[float] = None
    precision: float = 0.0
    recall: float = 0.0
    tp: int = 0
    fp: int = 0
    fn: int = 0
    pixel_precision: Optional[float] = None
    pixel_recall: Optional[float] = None
    zero_extraction_frames: int = 0
    inference_count: int = 0
    frames_processed: int = 0
    reduction_factor: float = 0.0
    latency: Dict[str, LatencySummary] = Field(default_factory=dict)
    counters: Dict[str, int] = Field(default_factory=dict)
    detector_failures: Dict[str, int] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)

    def apply_accounting(self, accounting: InferenceAccounting) -> "EvalReport":
        self.inference_count = accounting.inference_count
        self.frames_processed = accounting.frames_processed
        self.reduction_factor = accounting.reduction_factor
        return self

    def apply_pixel_score(self, score: PixelScore, zero_extraction_frames: int = 0) -> "EvalReport":
        self.pixel_precision = score.precision
        self.pixel_recall = score.recall
        self.zero_extraction_frames = zero_extraction_frames
        return self

    def to_json(self) -> bytes:
        return orjson.dumps(self.model_dump(mode="json"), option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS)

    def to_table(self) -> str:
        """Fixed-width text rendering."""
        lines = [f"{'class':<10}{'TP':>7}{'FP':>7}{'FN':>7}{'prec':>8}{'recall':>8}{'AP':>8}"]
        for name in sorted(self.classes):
            m = self.classes[name]
            ap = f"{m.ap:.4f}" if m.ap is not None else "n/a"
            lines.append(f"{name:<10}{m.tp:>7}{m.fp:>7}{m.fn:>7}{m.precision:>8.4f}{m.recall:>8.4f}{ap:>8}")
        mean_ap = f"{self.mean_ap:.4f}" if self.mean_ap is not None else "n/a"
        lines.append(
            f"{'all':<10}{self.tp:>7}{self.fp:>7}{self.fn:>7}{self.precision:>8.4f}{self.recall:>8.4f}{mean_ap:>8}"
        )
        if self.pixel_precision is not None:
            lines.append(f"pixel precision {self.pixel_precision:.4f}  pixel recall {self.pixel_recall:.4f}")
        if self.inference_count:
            lines.append(
                f"inferences {self.inference_count}  frames {self.frames_processed}  "
                f"reduction {self.reduction_factor:.3f}"
            )
        for stage in sorted(self.latency):
            s = self.latency[stage]
            lines.append(
                f"{stage:<10} n={s.count:<6} mean {s.mean_ms:8.3f} ms  p50 {s.p50_ms:8.3f} ms  p99 {s.p99_ms:8.3f} ms"
            )
        for note in self.notes:
            lines.append(f"note: {note}")
        return "\n".join(lines)


def _ratio(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator else 0.0


def evaluate(
    detections: Iterable[SceneDetection],
    annotations: Iterable[Annotation],
    frames: Optional[Iterable[Tuple[str, int]]] = None,
    iou_threshold: float = 0.3,
) -> EvalReport:
    """Score detections against curated annotations.

    Args:
        detections: Scene detections of a run
        annotations: Curated ground truth
        frames: Evaluated (stream_id, frame_index) pairs; all annotated and
            detected frames when omitted
        iou_threshold: Minimum IoU for a match

    Returns:
        EvalReport with per-class metrics and mAP over classes with ground truth
    """
    detections = list(detections)
    annotations = list(annotations)
    if frames is not None:
        keep: Set[Tuple[str, int]] = set(frames)
        detections = [d for d in detections if d.frame_key in keep]
        annotations = [a for a in annotations if a.frame_key in keep]

    preds_by_class: Dict[str, List[SceneDetection]] = defaultdict(list)
    gts_by_class: Dict[str, List[Annotation]] = defaultdict(list)
    for d in detections:
        preds_by_class[d.class_label.value].append(d)
    for a in annotations:
        gts_by_class[a.class_label.value].append(a)

    report = EvalReport(iou_threshold=iou_threshold)
    aps = []
    for name in sorted(set(preds_by_class) | set(gts_by_class)):
        result = match_detections(preds_by_class[name], gts_by_class[name], iou_threshold)
        total_gt = len(gts_by_class[name])
        ap = average_precision(result.flagged, total_gt)
        report.classes[name] = ClassMetrics(
            tp=result.tp, fp=result.fp, fn=result.fn,
            precision=_ratio(result.tp, result.tp + result.fp),
            recall=_ratio(result.tp, total_gt),
            ap=ap,
        )
        report.tp += result.tp
        report.fp += result.fp
        report.fn += result.fn
        if ap is None:
            report.notes.append(f"class '{name}' has no ground truth; excluded from mAP")
        else:
            aps.append(ap)

    report.mean_ap = sum(aps) / len(aps) if aps else None
    report.precision = _ratio(report.tp, report.tp + report.fp)
    report.recall = _ratio(report.tp, report.tp + report.fn)
    logger.info(
        f"Evaluated {len(detections)} detections against {len(annotations)} annotations",
        extra={'event_type': 'evaluation_done', 'mean_ap': report.mean_ap, 'tp': report.tp, 'fp': report.fp}
    )
    return report


def summarize_latency(timings: pd.DataFrame) -> Dict[str, LatencySummary]:
    """Per-stage mean, median and 99th percentile.

    Args:
        timings: Frame with columns ``stage`` and ``seconds``
    """
    if timings.empty:
        return {}
    grouped = timings.groupby("stage")["seconds"]
    summary = pd.DataFrame({
        "count": grouped.count(),
        "mean": grouped.mean(),
        "p50": grouped.quantile(0.5),
        "p99": grouped.quantile(0.99),
    })
    return {
        str(stage): LatencySummary(
            count=int(row["count"]),
            mean_ms=float(row["mean"]) * 1000,
            p50_ms=float(row["p50"]) * 1000,
            p99_ms=float(row["p99"]) * 1000,
        )
        for stage, row in summary.iterrows()
    }
