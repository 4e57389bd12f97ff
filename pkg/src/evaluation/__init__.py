"""Detection and extraction metrics, inference accounting, reports."""

from .metrics import (
    iou, FlaggedPrediction, MatchResult, match_detections, average_precision, PixelScore, rasterize,
    pixel_precision_recall,
)
from .accounting import RunLog, RunLogEntry, InferenceAccounting, inference_accounting
from .report import EvalConfig, ClassMetrics, LatencySummary, EvalReport, evaluate, summarize_latency

__all__ = [
    "iou", "FlaggedPrediction", "MatchResult", "match_detections", "average_precision", "PixelScore", "rasterize",
    "pixel_precision_recall",
    "RunLog", "RunLogEntry", "InferenceAccounting", "inference_accounting",
    "EvalConfig", "ClassMetrics", "LatencySummary", "EvalReport", "evaluate", "summarize_latency",
]
