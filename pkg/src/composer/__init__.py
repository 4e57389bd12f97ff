"""Consolidating object crops into square composite frames."""

from .models import (
    CompositionPolicy, DownscaleLimit, Elastic, parse_policy, Placement, PackResult, CompositeFrame,
    ComposeStats, ComposerConfig,
)
from .pool import CropPool, enqueue
from .packing import pack, pack_alone, sort_for_packing
from .composer import Composer, CompositeDumper, compose, render, resize_to_input, full_frame_composite

__all__ = [
    "CompositionPolicy", "DownscaleLimit", "Elastic", "parse_policy", "Placement", "PackResult",
    "CompositeFrame", "ComposeStats", "ComposerConfig",
    "CropPool", "enqueue",
    "pack", "pack_alone", "sort_for_packing",
    "Composer", "CompositeDumper", "compose", "render", "resize_to_input", "full_frame_composite",
]
