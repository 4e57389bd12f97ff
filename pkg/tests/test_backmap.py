"""
Tests for mapping detections back to scene coordinates.
"""

import pytest
import sys
from pathlib import Path

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.backmap.translate import (
    BackmapStats, SceneDetection, read_scene_detections, translate, write_scene_detections,
)
from src.composer.models import CompositeFrame, Placement
from src.dataio.models import Annotation, BoundingBox, ClassLabel, PixelBuffer
from src.detector.models import Detection
from src.detector.oracle import map_to_input
from src.extract.models import ObjectCrop


def box(x, y, w, h) -> BoundingBox:
    return BoundingBox(x=x, y=y, w=w, h=h)


def placement(scene_box, at, stream_id="s", frame_index=0) -> Placement:
    crop = ObjectCrop(
        stream_id=stream_id, frame_index=frame_index, scene_box=scene_box,
        pixels=PixelBuffer.blank(scene_box.w, scene_box.h), arrival_seq=0,
    )
    return Placement(crop=crop, composite_box=box(at[0], at[1], scene_box.w, scene_box.h))


def composite(placements, canvas_side=128, scale_factor=1.0, composition_id=0) -> CompositeFrame:
    return CompositeFrame(
        canvas=PixelBuffer.blank(canvas_side, canvas_side), placements=placements,
        border_width=2, composition_id=composition_id, scale_factor=scale_factor,
    )


def detection(x, y, w, h, score=0.9) -> Detection:
    return Detection(x=x, y=y, w=w, h=h, class_label=ClassLabel.CAR, score=score)


class TestTranslate:
    """Input -> canvas -> crop -> scene."""

    def test_detection_covering_placement_maps_to_scene_box(self):
        p = placement(box(300, 200, 40, 30), (2, 2), stream_id="cam", frame_index=17)
        [d] = translate([detection(2, 2, 40, 30)], composite([p], composition_id=5))
        assert d.box == box(300, 200, 40, 30)
        assert d.frame_key == ("cam", 17)
        assert d.composition_id == 5
        assert d.class_label == ClassLabel.CAR

    def test_scale_factor_applied(self):
        p = placement(box(300, 200, 40, 30), (2, 2))
        [d] = translate([detection(1, 1, 20, 15)], composite([p], scale_factor=2.0))
        assert d.box == box(300, 200, 40, 30)

    def test_explicit_scale_overrides_composite(self):
        p = placement(box(0, 0, 40, 40), (0, 0))
        [d] = translate([detection(0, 0, 10, 10)], composite([p], scale_factor=None), scale_factor=4.0)
        assert d.box == box(0, 0, 40, 40)

    def test_detection_in_border_discarded(self):
        p = placement(box(0, 0, 20, 20), (2, 2))
        stats = BackmapStats()
        assert translate([detection(0, 0, 2, 2)], composite([p]), stats=stats) == []
        assert stats.discarded_low_overlap == 1
        assert stats.translated == 0

    def test_straddling_detection_goes_to_larger_share(self):
        left = placement(box(100, 100, 50, 50), (0, 0))
        right = placement(box(400, 300, 50, 50), (50, 0))
        # 30 px over the left placement, 20 px over the right one
        [d] = translate([detection(20, 10, 50, 30)], composite([left, right]))
        assert d.box == box(120, 110, 30, 30)

    def test_even_split_goes_to_first_placement(self):
        left = placement(box(100, 100, 50, 50), (0, 0))
        right = placement(box(400, 300, 50, 50), (50, 0))
        [d] = translate([detection(25, 0, 50, 10)], composite([left, right]))
        assert (d.box.x, d.box.y) == (125, 100)

    def test_low_share_discarded(self):
        p = placement(box(0, 0, 20, 20), (0, 0))
        stats = BackmapStats()
        # 40% inside the placement
        assert translate([detection(12, 0, 20, 10)], composite([p]), stats=stats) == []
        assert translate([detection(12, 0, 20, 10)], composite([p]), min_overlap=0.4, stats=stats)
        assert stats.discarded == 1

    def test_empty_placements(self):
        stats = BackmapStats()
        assert translate([detection(0, 0, 5, 5), detection(1, 1, 5, 5)], composite([]), stats=stats) == []
        assert stats.discarded_no_placement == 2

    def test_rounding_half_up(self):
        p = placement(box(0, 0, 20, 20), (2, 2))
        [d] = translate([detection(2.5, 2.5, 10, 10)], composite([p]))
        assert d.box == box(1, 1, 10, 10)

    def test_invalid_scale(self):
        p = placement(box(0, 0, 20, 20), (2, 2))
        with pytest.raises(ValueError):
            translate([detection(0, 0, 5, 5)], composite([p], scale_factor=None))

    def test_boxes_stay_inside_their_crop(self):
        rng = np.random.default_rng(8)
        p = placement(box(50, 60, 30, 40), (10, 10))
        for _ in range(500):
            x, y = rng.uniform(-10, 60, size=2)
            w, h = rng.uniform(1, 50, size=2)
            for d in translate([detection(x, y, w, h)], composite([p], canvas_side=64), min_overlap=0.0):
                assert d.box.x >= 50 and d.box.right <= 80
                assert d.box.y >= 60 and d.box.bottom <= 100

    @pytest.mark.parametrize("scale", [0.5, 1.0, 2.0])
    def test_round_trip_through_model_input(self, scale):
        rng = np.random.default_rng(int(scale * 10))
        for _ in range(1000):
            cw, ch = (int(v) for v in rng.integers(8, 120, size=2))
            crop_box = box(int(rng.integers(0, 1000)), int(rng.integers(0, 600)), cw, ch)
            gw, gh = int(rng.integers(1, cw + 1)), int(rng.integers(1, ch + 1))
            g = box(crop_box.x + int(rng.integers(0, cw - gw + 1)), crop_box.y + int(rng.integers(0, ch - gh + 1)), gw, gh)
            p = placement(crop_box, (int(rng.integers(2, 200)), int(rng.integers(2, 200))))
            c = composite([p], canvas_side=512, scale_factor=scale)

            truth = Annotation(stream_id="s", frame_index=0, object_id=1, class_label=ClassLabel.CAR, box=g)
            x, y, w, h = map_to_input(truth, p, scale)
            [d] = translate([detection(x, y, w, h)], c)
            back = np.array(d.box.as_tuple())
            if scale == 1.0:
                assert d.box == g
            else:
                assert np.abs(back - np.array(g.as_tuple())).max() <= 1


class TestDetectionsCsv:
    """Scene detection files."""

    def test_write_then_read(self, tmp_path):
        detections = [
            SceneDetection("007", 250, box(1, 2, 3, 4), ClassLabel.PERSON, 0.25, composition_id=3),
            SceneDetection("cam", 260, box(10, 20, 30, 40), ClassLabel.BIKE, 1.0, composition_id=4),
        ]
        path = write_scene_detections(tmp_path / "out" / "detections.csv", detections)
        assert path.read_text().splitlines()[0] == "composition_id,stream_id,frame_index,class,score,x,y,w,h"
        assert read_scene_detections(path) == detections

    def test_empty_file(self, tmp_path):
        path = write_scene_detections(tmp_path / "detections.csv", [])
        assert read_scene_detections(path) == []
