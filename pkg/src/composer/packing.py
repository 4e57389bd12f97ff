"""
First-fit-decreasing packing onto a square canvas.

Crops are inflated by the border on every side and sorted by width
(descending), then height (descending), then arrival_seq. The sorted crops
are placed first-fit by up to three passes, tried in order at each canvas
side until one places everything:

- shelves: each crop goes into the first shelf with enough remaining width
  whose height can hold it; the bottom shelf may grow taller while nothing
  sits below it; otherwise a new shelf opens below the previous one.
- rows: each crop drops onto the lowest point of the skyline formed by the
  crops placed so far (leftmost on ties).
- columns: the same skyline placement with the axes swapped, so crops fill
  the canvas column by column.

The canvas side starts at the smallest multiple of `step` that can hold the
widest crop, the tallest crop and the total area, and grows by `step` until
everything fits or `side_limit` is reached. At the limit the pass that
places the most crops wins.
"""

import math
from typing import Callable, List, Optional, Sequence, Tuple

from ..dataio.models import BoundingBox
from ..extract.models import ObjectCrop
from .models import PackResult, Placement

Positions = List[Tuple[ObjectCrop, int, int]]
PassResult = Tuple[Positions, List[ObjectCrop]]


def _ceil_to(value: float, step: int) -> int:
    return max(step, int(math.ceil(value / step)) * step)


def _fits(crop: ObjectCrop, border: int, side: int) -> bool:
    return crop.width + 2 * border <= side and crop.height + 2 * border <= side


def _shelf_pass(items: Sequence[ObjectCrop], border: int, side: int) -> PassResult:
    # Shelf = [top, height, used width]
    shelves: List[List[int]] = []
    next_top = 0
    positions: Positions = []
    unplaced: List[ObjectCrop] = []
    for crop in items:
        w = crop.width + 2 * border
        h = crop.height + 2 * border
        for i, shelf in enumerate(shelves):
            top, height, used = shelf
            if used + w > side:
                continue
            if h <= height:
                positions.append((crop, used, top))
                shelf[2] = used + w
                break
            if i == len(shelves) - 1 and top + h <= side:
                positions.append((crop, used, top))
                shelf[1] = h
                shelf[2] = used + w
                next_top = top + h
                break
        else:
            if w <= side and next_top + h <= side:
                shelves.append([next_top, h, w])
                positions.append((crop, 0, next_top))
                next_top += h
            else:
                unplaced.append(crop)
    return positions, unplaced


def _raise_skyline(skyline: List[List[int]], x: int, w: int, top: int) -> List[List[int]]:
    end = x + w
    updated = []
    for sx, sw, sy in skyline:
        if sx + sw <= x or sx >= end:
            updated.append([sx, sw, sy])
            continue
        if sx < x:
            updated.append([sx, x - sx, sy])
        if sx + sw > end:
            updated.append([end, sx + sw - end, sy])
    updated.append([x, w, top])
    updated.sort()
    merged: List[List[int]] = []
    for segment in updated:
        if merged and merged[-1][2] == segment[2]:
            merged[-1][1] += segment[1]
        else:
            merged.append(segment)
    return merged


def _skyline_pass(items: Sequence[ObjectCrop], border: int, side: int, columns: bool = False) -> PassResult:
    # Segment = [x, width, height of the stack under it]
    skyline = [[0, side, 0]]
    positions: Positions = []
    unplaced: List[ObjectCrop] = []
    for crop in items:
        w = crop.width + 2 * border
        h = crop.height + 2 * border
        if columns:
            w, h = h, w
        best: Optional[Tuple[int, int]] = None
        for i, (x, _, _) in enumerate(skyline):
            if x + w > side:
                break
            y = 0
            for sx, _, sy in skyline[i:]:
                if sx >= x + w:
                    break
                y = max(y, sy)
            if y + h <= side and (best is None or y < best[1]):
                best = (x, y)
        if best is None:
            unplaced.append(crop)
            continue
        x, y = best
        skyline = _raise_skyline(skyline, x, w, y + h)
        positions.append((crop, y, x) if columns else (crop, x, y))
    return positions, unplaced


def _column_pass(items: Sequence[ObjectCrop], border: int, side: int) -> PassResult:
    return _skyline_pass(items, border, side, columns=True)


PASSES: Tuple[Callable[[Sequence[ObjectCrop], int, int], PassResult], ...] = (
    _shelf_pass, _skyline_pass, _column_pass,
)


def _first_fit(items: Sequence[ObjectCrop], border: int, side: int) -> PassResult:
    best: Optional[PassResult] = None
    for packing_pass in PASSES:
        positions, unplaced = packing_pass(items, border, side)
        if not unplaced:
            return positions, unplaced
        if best is None or len(positions) > len(best[0]):
            best = (positions, unplaced)
    return best


def sort_for_packing(crops: Sequence[ObjectCrop]) -> List[ObjectCrop]:
    return sorted(crops, key=lambda c: (-c.width, -c.height, c.arrival_seq))


def pack(
    crops: Sequence[ObjectCrop],
    border: int = 2,
    side_limit: Optional[int] = None,
    step: int = 32,
) -> PackResult:
    """Pack crops onto the smallest square canvas the first-fit passes reach.

    Args:
        crops: Candidate crops
        border: Blank margin kept around each crop
        side_limit: Maximum canvas side, or None for unlimited
        step: Canvas side quantization

    Returns:
        PackResult with placements (composite boxes exclude the border),
        leftover crops in FCFS order and the canvas side. With no crops
        placed the canvas side is 0.
    """
    candidates = list(crops)
    leftover: List[ObjectCrop] = []
    if side_limit is not None:
        leftover = [c for c in candidates if not _fits(c, border, side_limit)]
        candidates = [c for c in candidates if _fits(c, border, side_limit)]
    if not candidates:
        return PackResult(placements=[], leftover=sorted(leftover, key=lambda c: c.arrival_seq), canvas_side=0)

    items = sort_for_packing(candidates)
    widest = max(c.width for c in items) + 2 * border
    tallest = max(c.height for c in items) + 2 * border
    total_area = sum((c.width + 2 * border) * (c.height + 2 * border) for c in items)
    side = _ceil_to(max(widest, tallest, math.sqrt(total_area)), step)
    if side_limit is not None:
        side = min(side, side_limit)

    while True:
        positions, unplaced = _first_fit(items, border, side)
        at_limit = side_limit is not None and side >= side_limit
        if not unplaced or at_limit:
            break
        side += step
        if side_limit is not None:
            side = min(side, side_limit)

    placements = [
        Placement(crop=crop, composite_box=BoundingBox(x=x + border, y=y + border, w=crop.width, h=crop.height))
        for crop, x, y in positions
    ]
    used_side = max(
        max(p.composite_box.right + border, p.composite_box.bottom + border) for p in placements
    )
    leftover = sorted(leftover + unplaced, key=lambda c: c.arrival_seq)
    return PackResult(placements=placements, leftover=leftover, canvas_side=side, used_side=used_side)


def pack_alone(crop: ObjectCrop, border: int = 2) -> PackResult:
    """Single crop on a canvas exactly as large as its inflated size."""
    side = max(crop.width, crop.height) + 2 * border
    placement = Placement(crop=crop, composite_box=BoundingBox(x=border, y=border, w=crop.width, h=crop.height))
    return PackResult(placements=[placement], leftover=[], canvas_side=side, used_side=side)
