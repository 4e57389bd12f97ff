"""Mask to boxes to crops."""

from .models import ObjectCrop, CropStats, ExtractConfig
from .components import connected_components, filter_and_merge
from .crops import ArrivalCounter, clamp_box, crop_objects, crop_annotations, paste_crops, CropDumper

__all__ = [
    "ObjectCrop", "CropStats", "ExtractConfig",
    "connected_components", "filter_and_merge",
    "ArrivalCounter", "clamp_box", "crop_objects", "crop_annotations", "paste_crops", "CropDumper",
]
