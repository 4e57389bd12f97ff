"""
Integration tests for the micro-benchmarks.

The latency ordering check is hardware-sensitive and slow; it only runs
with FOMO_RUN_BENCH=1.
"""

import os
import pytest
import sys
from pathlib import Path

import cv2

# Add project root to path
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root))

from src.bgs.models import BgsConfig, BgsMethod
from src.pipeline.bench import bench_bgs, bench_compose
from src.pipeline.synthetic import SyntheticSpec, iter_frames

RUN_BENCH = os.environ.get("FOMO_RUN_BENCH") == "1"


def synthetic_frames(width, height, count):
    spec = SyntheticSpec(frames=count, width=width, height=height, objects=6, seed=1)
    return [pixels for _, pixels, _ in iter_frames(spec, "bench", seed=1)]


class TestBenchCompose:
    """Composition latency table."""

    def test_table_shape(self):
        table = bench_compose(object_counts=[1, 4, 16], repeats=2, seed=3)
        assert list(table.columns) == [
            "objects", "repeat", "canvas_side", "used_side", "area_lower_bound", "compose_ms",
        ]
        assert table["objects"].tolist() == [1, 1, 4, 4, 16, 16]
        assert (table["canvas_side"] >= table["used_side"]).all()
        assert (table["used_side"] >= table["area_lower_bound"]).all()
        assert (table["compose_ms"] >= 0).all()

    def test_canvas_within_twice_area_bound(self):
        table = bench_compose(object_counts=[100], repeats=3, seed=11)
        assert (table["canvas_side"] <= 2 * table["area_lower_bound"]).all()

    def test_seeded(self):
        a = bench_compose(object_counts=[8], repeats=3, seed=4)
        b = bench_compose(object_counts=[8], repeats=3, seed=4)
        assert a["canvas_side"].tolist() == b["canvas_side"].tolist()


class TestBenchBgs:
    """Extraction latency per method."""

    def test_small_frames(self):
        table = bench_bgs(BgsConfig(), synthetic_frames(160, 120, 12), frame_step=10)
        assert table["method"].tolist() == [m.value for m in BgsMethod]
        assert (table["frames"] == 11).all()
        assert (table["mean_ms"] > 0).all()

    def test_restores_opencv_threads(self):
        before = cv2.getNumThreads()
        bench_bgs(BgsConfig(), synthetic_frames(64, 48, 3), methods=[BgsMethod.MOG2], threads=1)
        assert cv2.getNumThreads() == before

    def test_needs_two_frames(self):
        with pytest.raises(ValueError):
            bench_bgs(BgsConfig(), synthetic_frames(32, 32, 1))

    @pytest.mark.skipif(not RUN_BENCH, reason="Set FOMO_RUN_BENCH=1 to run latency benchmarks")
    def test_latency_ordering_720p(self):
        table = bench_bgs(BgsConfig(), synthetic_frames(1280, 720, 100)).set_index("method")
        ptp = table.loc[BgsMethod.PTP_MEAN.value, "mean_ms"]
        mog = table.loc[BgsMethod.MOG2.value, "mean_ms"]
        hybrid = table.loc[BgsMethod.HYBRID.value, "mean_ms"]
        assert ptp > hybrid > mog
        assert ptp / mog >= 3
