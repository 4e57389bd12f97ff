"""
Mask -> bounding boxes: 8-connected components, area filter, overlap merge.
"""

from typing import Iterable, List

import cv2
import numpy as np

from ..bgs.models import BinaryMask
from ..dataio.models import BoundingBox


def _row_major(boxes: Iterable[BoundingBox]) -> List[BoundingBox]:
    return sorted(boxes, key=lambda b: (b.y, b.x, b.h, b.w))


def connected_components(mask: BinaryMask) -> List[BoundingBox]:
    """Tight bounding box of every 8-connected foreground component.

    Returns:
        Boxes ordered by top-left corner, row-major
    """
    if not mask.data.any():
        return []
    count, _, stats, _ = cv2.connectedComponentsWithStats(
        mask.data.astype(np.uint8), connectivity=8, ltype=cv2.CV_32S
    )
    boxes = [
        BoundingBox(
            x=int(stats[label, cv2.CC_STAT_LEFT]),
            y=int(stats[label, cv2.CC_STAT_TOP]),
            w=int(stats[label, cv2.CC_STAT_WIDTH]),
            h=int(stats[label, cv2.CC_STAT_HEIGHT]),
        )
        # Label 0 is the background
        for label in range(1, count)
    ]
    return _row_major(boxes)


def filter_and_merge(
    boxes: Iterable[BoundingBox],
    min_area: int = 400,
    merge_iou: float = 0.0,
) -> List[BoundingBox]:
    """Drop small boxes, then merge overlapping ones until nothing changes.

    Args:
        boxes: Candidate boxes
        min_area: Boxes with area below this are removed
        merge_iou: Pairs with IoU above this are replaced by their union

    Returns:
        Surviving boxes ordered row-major
    """
    kept = [b for b in boxes if b.area() >= min_area]

    merged = True
    while merged:
        merged = False
        for i in range(len(kept)):
            for j in range(i + 1, len(kept)):
                if kept[i].iou(kept[j]) > merge_iou:
                    kept[i] = kept[i].union(kept[j])
                    del kept[j]
                    merged = True
                    break
            if merged:
                break

    return _row_major(kept)
