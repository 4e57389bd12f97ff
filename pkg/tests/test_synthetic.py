"""
Tests for the synthetic scene generator.
"""

import pytest
import sys
from pathlib import Path

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.dataio.annotations import curate_annotations, parse_annotations
from src.dataio.frames import load_sequence
from src.dataio.sequences import discover_sequences
from src.extract.crops import ArrivalCounter, crop_annotations
from src.extract.models import CropStats
from src.pipeline.synthetic import SyntheticSpec, gen_synthetic, iter_frames


@pytest.fixture
def small_spec():
    return SyntheticSpec(frames=20, width=160, height=120, objects=3, min_size=10, max_size=20, noise=0)


class TestSyntheticSpec:
    """Generator parameters."""

    def test_ranges(self):
        with pytest.raises(ValueError):
            SyntheticSpec(min_size=50, max_size=10)
        with pytest.raises(ValueError):
            SyntheticSpec(min_speed=5, max_speed=1)
        with pytest.raises(ValueError):
            SyntheticSpec(noise=100)

    def test_stream_ids(self):
        assert SyntheticSpec().stream_id(0) == "synth"
        assert SyntheticSpec(streams=3).stream_id(2) == "synth_02"


class TestIterFrames:
    """In-memory rendering."""

    def test_seeded_output_is_reproducible(self, small_spec):
        first = list(iter_frames(small_spec, "s", seed=3))
        second = list(iter_frames(small_spec, "s", seed=3))
        for (i, a, ann_a), (j, b, ann_b) in zip(first, second):
            assert i == j
            assert np.array_equal(a.data, b.data)
            assert ann_a == ann_b

    def test_annotations_match_pixels(self, small_spec):
        for _, pixels, annotations in iter_frames(small_spec, "s", seed=1):
            assert len(annotations) == 3
            for a in annotations:
                region = pixels.data[a.box.y:a.box.bottom, a.box.x:a.box.right]
                assert (region >= 170).all()

    def test_boxes_inside_frame_and_lanes_disjoint(self, small_spec):
        for _, _, annotations in iter_frames(small_spec.model_copy(update={"frames": 100}), "s", seed=2):
            for a in annotations:
                assert 0 <= a.box.x and a.box.right <= 160
                assert 0 <= a.box.y and a.box.bottom <= 120
            for i, a in enumerate(annotations):
                for b in annotations[i + 1:]:
                    assert a.box.intersection(b.box) is None

    def test_noise_amplitude(self):
        spec = SyntheticSpec(frames=2, width=64, height=64, objects=0, noise=2)
        frames = [p.data.astype(int) for _, p, _ in iter_frames(spec, "s", seed=0)]
        assert np.abs(frames[0] - frames[1]).max() <= 4

    def test_static_distractors_are_removed_by_curation(self):
        spec = SyntheticSpec(frames=60, width=200, height=160, objects=2, static_distractors=2, min_speed=2, noise=0)
        annotations = [a for _, _, frame in iter_frames(spec, "s", seed=4) for a in frame]
        assert {a.object_id for a in curate_annotations(annotations)} == {1, 2}

    def test_target_occupancy(self):
        spec = SyntheticSpec(frames=1, width=400, height=300, objects=4, target_occupancy=0.04, noise=0)
        [(_, _, annotations)] = list(iter_frames(spec, "s", seed=0))
        covered = sum(a.box.area() for a in annotations) / (400 * 300)
        assert covered == pytest.approx(0.04, rel=0.05)

    def test_objects_leave_and_reenter(self):
        spec = SyntheticSpec(
            frames=60, width=100, height=40, objects=1, min_size=20, max_size=20,
            min_speed=5, max_speed=5, exits=True, noise=0,
        )
        counter, stats = ArrivalCounter(), CropStats()
        per_frame = []
        for _, pixels, annotations in iter_frames(spec, "s", seed=5):
            crops = crop_annotations(pixels, annotations, counter, stats)
            assert len(crops) == len(annotations)
            for crop in crops:
                box = crop.scene_box
                assert 0 <= box.x and box.right <= 100
                assert (crop.pixels.data >= 170).all()
            per_frame.append(crops)

        assert any(not crops for crops in per_frame)
        assert any(crop.scene_box.w < 20 for crops in per_frame for crop in crops)
        assert stats.skipped_empty == 0


class TestGenSynthetic:
    """Dataset layout on disk."""

    def test_layout_is_loadable(self, small_spec, tmp_path):
        spec = small_spec.model_copy(update={"streams": 2})
        root = gen_synthetic(spec, tmp_path / "synth")
        found = discover_sequences(root)
        assert [s.stream_id for s in found] == ["synth_00", "synth_01"]
        assert all(s.frame_count == 20 for s in found)

        annotations = parse_annotations(found[1].annotations_path)
        assert len(annotations) == 20 * 3
        assert all(a.stream_id == "synth_01" for a in annotations)

        frames = list(load_sequence(found[1].frames_dir))
        _, pixels, expected = next(iter(iter_frames(spec, "synth_01", seed=spec.seed + 1)))
        assert np.array_equal(frames[0].pixels.data, pixels.data)
        assert [a for a in annotations if a.frame_index == 0] == expected
