"""
Tests for the ground-truth oracle detector and detector construction.
"""

import pytest
import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.composer.models import CompositeFrame, Placement
from src.core.errors import ConfigurationError
from src.dataio.models import Annotation, BoundingBox, ClassLabel, PixelBuffer
from src.detector.factory import create_detector
from src.detector.models import (
    Detection, DetectorConfig, InvalidDetectionError, MissingMetadataError, OracleConfig,
)
from src.detector.oracle import OracleDetector, corresponding_annotations, oracle_detect
from src.detector.remote import RemoteDetector
from src.extract.models import ObjectCrop


def box(x, y, w, h) -> BoundingBox:
    return BoundingBox(x=x, y=y, w=w, h=h)


def annotation(object_id, b, frame_index=0, label=ClassLabel.CAR) -> Annotation:
    return Annotation(stream_id="s", frame_index=frame_index, object_id=object_id, class_label=label, box=b)


def placement(scene_box, at, object_id=None, frame_index=0, seq=0) -> Placement:
    crop = ObjectCrop(
        stream_id="s", frame_index=frame_index, scene_box=scene_box,
        pixels=PixelBuffer.blank(scene_box.w, scene_box.h), arrival_seq=seq, object_id=object_id,
    )
    return Placement(crop=crop, composite_box=box(at[0], at[1], scene_box.w, scene_box.h))


def composite(placements, canvas_side, scale_factor) -> CompositeFrame:
    return CompositeFrame(
        canvas=PixelBuffer.blank(canvas_side, canvas_side), placements=placements,
        border_width=2, composition_id=0, scale_factor=scale_factor,
    )


@pytest.fixture
def scene():
    """Four objects in frame ("s", 0) and one BGS crop covering part of them."""
    annotations = [
        annotation(1, box(10, 10, 20, 20)),
        annotation(2, box(40, 40, 20, 20)),
        annotation(3, box(30, 0, 40, 20), label=ClassLabel.PERSON),
        annotation(4, box(200, 200, 10, 10)),
    ]
    ground_truth = {("s", 0): annotations}
    return ground_truth, placement(box(0, 0, 50, 50), (2, 2))


class TestCorrespondence:
    """Which annotations a placed crop stands for."""

    def test_annotation_crop_yields_its_object_only(self, scene):
        ground_truth, _ = scene
        p = placement(box(40, 40, 20, 20), (2, 2), object_id=2)
        assert [a.object_id for a in corresponding_annotations(p, ground_truth, 0.5)] == [2]

    def test_bgs_crop_uses_coverage(self, scene):
        ground_truth, p = scene
        # object 2 has 25% inside the crop, object 3 exactly 50%
        assert [a.object_id for a in corresponding_annotations(p, ground_truth, 0.5)] == [1, 3]
        assert [a.object_id for a in corresponding_annotations(p, ground_truth, 0.2)] == [1, 2, 3]

    def test_other_frames_ignored(self, scene):
        ground_truth, _ = scene
        p = placement(box(0, 0, 50, 50), (2, 2), frame_index=1)
        assert corresponding_annotations(p, ground_truth, 0.5) == []


class TestOracleDetect:
    """Oracle detections in model-input coordinates."""

    def test_exact_mapping_with_downscale(self):
        ground_truth = {("s", 0): [annotation(3, box(100, 50, 40, 30))]}
        c = composite([placement(box(100, 50, 40, 30), (2, 2), object_id=3)], 64, 0.5)
        [d] = oracle_detect(PixelBuffer.blank(128, 128), c, ground_truth, OracleConfig())
        assert (d.x, d.y, d.w, d.h) == (4.0, 4.0, 80.0, 60.0)
        assert d.class_label == ClassLabel.CAR
        assert d.score == 1.0

    def test_bgs_crop_boxes_clipped_to_crop(self, scene):
        ground_truth, p = scene
        detections = oracle_detect(PixelBuffer.blank(64, 64), composite([p], 64, 1.0), ground_truth, OracleConfig())
        assert [d.as_tuple() for d in detections] == [(12.0, 12.0, 20.0, 20.0), (32.0, 2.0, 20.0, 20.0)]
        assert [d.class_label for d in detections] == [ClassLabel.CAR, ClassLabel.PERSON]

    def test_missing_metadata(self, scene):
        ground_truth, p = scene
        with pytest.raises(MissingMetadataError):
            oracle_detect(PixelBuffer.blank(64, 64), None, ground_truth, OracleConfig())
        with pytest.raises(MissingMetadataError):
            oracle_detect(PixelBuffer.blank(64, 64), composite([p], 64, None), ground_truth, OracleConfig())

    def test_drop_everything(self, scene):
        ground_truth, p = scene
        config = OracleConfig(drop_rate=1.0)
        assert oracle_detect(PixelBuffer.blank(64, 64), composite([p], 64, 1.0), ground_truth, config) == []

    def test_spurious_box_inside_input(self):
        config = OracleConfig(spurious_rate=1.0, rng_seed=5)
        [d] = oracle_detect(PixelBuffer.blank(320, 320), composite([], 64, 0.2), {}, config)
        assert d.score == 0.5
        assert 0 <= d.x and d.right <= 320
        assert 0 <= d.y and d.bottom <= 320
        assert 20 <= d.w <= 80

    def test_small_objects_missed(self):
        ground_truth = {("s", 0): [annotation(1, box(0, 0, 10, 10))]}
        c = composite([placement(box(0, 0, 10, 10), (2, 2), object_id=1)], 64, 2.0)
        model_input = PixelBuffer.blank(32, 32)
        assert oracle_detect(model_input, c, ground_truth, OracleConfig(min_input_px=6)) == []
        assert len(oracle_detect(model_input, c, ground_truth, OracleConfig(min_input_px=5))) == 1

    def test_jitter_stays_inside_input(self):
        ground_truth = {("s", 0): [annotation(1, box(0, 0, 30, 30))]}
        c = composite([placement(box(0, 0, 30, 30), (0, 0), object_id=1)], 32, 1.0)
        config = OracleConfig(jitter_px=20.0)
        oracle = OracleDetector(32, ground_truth, config)
        for _ in range(50):
            for d in oracle.detect(PixelBuffer.blank(32, 32), c):
                assert 0 <= d.x and d.right <= 32
                assert 0 <= d.y and d.bottom <= 32

    def test_downscale_jitter_inactive_at_scale_one(self, scene):
        ground_truth, p = scene
        config = OracleConfig(jitter_per_downscale=5.0)
        detections = oracle_detect(PixelBuffer.blank(64, 64), composite([p], 64, 1.0), ground_truth, config)
        assert detections[0].as_tuple() == (12.0, 12.0, 20.0, 20.0)

    def test_seeded_runs_are_identical(self, scene):
        ground_truth, p = scene
        config = OracleConfig(jitter_px=3.0, drop_rate=0.3, spurious_rate=0.5, rng_seed=42)
        c = composite([p], 64, 1.0)
        runs = []
        for _ in range(2):
            oracle = OracleDetector(64, ground_truth, config)
            runs.append([oracle.detect(PixelBuffer.blank(64, 64), c) for _ in range(20)])
        assert runs[0] == runs[1]

    def test_calls_counted(self, scene):
        ground_truth, p = scene
        oracle = OracleDetector(64, ground_truth)
        oracle.detect(PixelBuffer.blank(64, 64), composite([p], 64, 1.0))
        oracle.detect(PixelBuffer.blank(64, 64), composite([p], 64, 1.0))
        assert oracle.stats.calls == 2


class TestDetectorModels:
    """Detection invariants, settings and construction."""

    def test_score_outside_unit_interval(self):
        with pytest.raises(InvalidDetectionError):
            Detection(x=0, y=0, w=1, h=1, class_label=ClassLabel.CAR, score=1.01)

    def test_negative_size(self):
        with pytest.raises(InvalidDetectionError):
            Detection(x=0, y=0, w=-1, h=1, class_label=ClassLabel.CAR, score=0.5)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            OracleConfig(drop_rate=1.5)
        with pytest.raises(ValueError):
            DetectorConfig(endpoint="localhost")
        with pytest.raises(ValueError):
            DetectorConfig(timeout_s=0)
        assert DetectorConfig(endpoint="localhost:9100").endpoint == "localhost:9100"

    def test_create_detector(self):
        assert isinstance(create_detector(DetectorConfig(), 320, {}), OracleDetector)
        remote = create_detector(DetectorConfig(kind="remote", endpoint="127.0.0.1:9"), 320, {})
        assert isinstance(remote, RemoteDetector)
        assert (remote.host, remote.port) == ("127.0.0.1", 9)

    def test_remote_requires_endpoint(self):
        with pytest.raises(ConfigurationError):
            create_detector(DetectorConfig(kind="remote"), 320, {})
