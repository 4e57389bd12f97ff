"""Mapping detections from model inputs back to scene coordinates."""

from .translate import (
    SceneDetection, BackmapStats, translate, write_scene_detections, read_scene_detections, CSV_COLUMNS,
)

__all__ = [
    "SceneDetection", "BackmapStats", "translate", "write_scene_detections", "read_scene_detections", "CSV_COLUMNS",
]
