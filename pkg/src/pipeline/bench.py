"""
Micro-benchmarks: extraction latency per background subtraction method and
composition latency against object count.
"""

import math
import time
from typing import Iterable, List, Optional, Sequence

import cv2
import numpy as np
import pandas as pd

from ..bgs.models import BgsConfig, BgsMethod
from ..bgs.subtractor import create_subtractor
from ..composer.composer import compose
from ..composer.models import Elastic
from ..composer.pool import CropPool
from ..dataio.models import BoundingBox, PixelBuffer
from ..extract.components import connected_components, filter_and_merge
from ..extract.models import ObjectCrop
from ..utils.logging import get_logger

logger = get_logger(__name__)


def bench_bgs(
    config: BgsConfig,
    frames: Sequence[PixelBuffer],
    methods: Optional[Iterable[BgsMethod]] = None,
    min_area: int = 400,
    frame_step: int = 10,
    threads: int = 1,
) -> pd.DataFrame:
    """Mean per-frame extraction latency (mask + boxes) for each method.

    Every method sees the same frames with OpenCV limited to `threads`
    worker threads; the previous setting is restored afterwards. The first
    frame only primes the model and is not timed.

    Args:
        config: Base settings; ``method`` is overridden per run
        frames: Input frames (at least 2)
        methods: Methods to time (default: all three)
        min_area: Box filter threshold
        frame_step: Frame index increment between consecutive frames
        threads: OpenCV thread count while timing

    Returns:
        One row per method: method, frames, mean_ms, p50_ms, p99_ms
    """
    if len(frames) < 2:
        raise ValueError("bench_bgs needs at least 2 frames")
    previous_threads = cv2.getNumThreads()
    cv2.setNumThreads(threads)
    try:
        rows = [_time_method(config, frames, BgsMethod(m), min_area, frame_step) for m in methods or list(BgsMethod)]
    finally:
        cv2.setNumThreads(previous_threads)
    return pd.DataFrame(rows)


def _time_method(config: BgsConfig, frames: Sequence[PixelBuffer], method: BgsMethod, min_area: int, frame_step: int) -> dict:
    subtractor = create_subtractor(config.model_copy(update={"method": method}))
    subtractor.apply(frames[0], 0, extract=False)
    samples = []
    for i, frame in enumerate(frames[1:], start=1):
        start = time.perf_counter()
        mask = subtractor.apply(frame, i * frame_step)
        if mask is not None:
            filter_and_merge(connected_components(mask), min_area)
        samples.append((time.perf_counter() - start) * 1000)
    values = np.asarray(samples)
    logger.info(
        f"bench_bgs {method.value}: {values.mean():.3f} ms/frame",
        extra={'event_type': 'bench_bgs', 'method': method.value}
    )
    return {
        "method": method.value,
        "frames": len(samples),
        "mean_ms": float(values.mean()),
        "p50_ms": float(np.percentile(values, 50)),
        "p99_ms": float(np.percentile(values, 99)),
    }


def random_crops(count: int, min_side: int, max_side: int, rng: np.random.Generator) -> List[ObjectCrop]:
    """Crops of random size, one per synthetic frame, arrival order = creation order."""
    crops = []
    for i in range(count):
        w = int(rng.integers(min_side, max_side + 1))
        h = int(rng.integers(min_side, max_side + 1))
        pixels = PixelBuffer(rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8))
        crops.append(ObjectCrop(
            stream_id="bench", frame_index=i, scene_box=BoundingBox(x=0, y=0, w=w, h=h),
            pixels=pixels, arrival_seq=i,
        ))
    return crops


def bench_compose(
    object_counts: Iterable[int] = (1, 2, 4, 8, 16, 32, 64, 100),
    min_side: int = 20,
    max_side: int = 120,
    repeats: int = 5,
    border: int = 2,
    seed: int = 0,
) -> pd.DataFrame:
    """Composition latency and canvas size against the number of objects.

    Returns:
        One row per (object count, repeat): objects, canvas_side, used_side,
        area_lower_bound (sqrt of the summed crop areas) and compose_ms
    """
    rng = np.random.default_rng(seed)
    rows = []
    for count in object_counts:
        for repeat in range(repeats):
            crops = random_crops(count, min_side, max_side, rng)
            pool = CropPool(capacity=max(count, 1))
            pool.enqueue_many(crops)
            start = time.perf_counter()
            composite, _ = compose(pool, Elastic(max_frames=count), border)
            elapsed = (time.perf_counter() - start) * 1000
            rows.append({
                "objects": count,
                "repeat": repeat,
                "canvas_side": composite.canvas_side,
                "used_side": composite.used_side,
                "area_lower_bound": math.sqrt(sum(c.width * c.height for c in crops)),
                "compose_ms": elapsed,
            })
    return pd.DataFrame(rows)
