"""
Tests for the background subtraction methods.
"""

import pytest
import sys
from pathlib import Path

import cv2
import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.bgs.hybrid import HybridModel, hybrid_mask, hybrid_update
from src.bgs.imaging import difference_mask, gaussian_sigma
from src.bgs.models import BgsConfig, BgsMethod, BgsWarmupError, BinaryMask, DimensionMismatchError
from src.bgs.mog import ReferenceMixture, create_mixture, mog_background, mog_mask, mog_update, startup_learning_rate
from src.bgs.ptp import MovingAverageModel, ptp_mask, ptp_update
from src.bgs.subtractor import MaskDumper, create_subtractor
from src.dataio.models import PixelBuffer

W, H = 32, 24


def solid(value, width=W, height=H) -> PixelBuffer:
    return PixelBuffer.filled(width, height, value)


def with_patch(base: int, value: int, x: int, y: int, side: int) -> PixelBuffer:
    frame = solid(base)
    frame.data[y:y + side, x:x + side] = value
    return frame


@pytest.fixture
def config():
    return BgsConfig(mog_engine="reference")


class TestMovingAverage:
    """Moving-average background model."""

    def test_constant_frames(self):
        model = MovingAverageModel(window=20, sample_skip=1)
        for i in range(20):
            ptp_update(model, solid(100), i)
        assert np.all(model.mean() == 100)

    def test_two_sample_average(self):
        model = MovingAverageModel(window=20, sample_skip=1)
        ptp_update(model, solid(0), 0)
        ptp_update(model, solid(200), 1)
        assert np.all(model.mean() == 100)

    def test_oldest_sample_evicted(self):
        model = MovingAverageModel(window=3, sample_skip=1)
        for i, value in enumerate([10, 20, 30, 40]):
            ptp_update(model, solid(value), i)
        assert np.allclose(model.mean(), 30)
        assert len(model.samples) == 3

    def test_sampling_cadence(self):
        model = MovingAverageModel(window=20, sample_skip=10)
        sampled = [i for i in range(26) if ptp_update(model, solid(i), i)]
        assert sampled == [0, 10, 20]
        assert model.samples_taken == 3
        assert model.frames_offered == 26

    def test_dimension_mismatch(self):
        model = MovingAverageModel(window=3, sample_skip=1)
        ptp_update(model, solid(0), 0)
        with pytest.raises(DimensionMismatchError):
            ptp_update(model, solid(0, width=W + 1), 1)

    def test_mask_before_samples(self, config):
        with pytest.raises(BgsWarmupError):
            ptp_mask(MovingAverageModel(), solid(0), config)


class TestDifferencePipeline:
    """Grayscale, blur, difference and threshold."""

    def test_sigma_for_kernel_5(self):
        assert gaussian_sigma(5) == pytest.approx(1.1)

    def test_identical_frames_empty_mask(self, config):
        frame = with_patch(40, 90, 3, 3, 8)
        mask = difference_mask(frame, frame.copy(), config.blur_kernel, config.diff_threshold)
        assert mask.count() == 0
        assert (mask.width, mask.height) == (W, H)

    def test_full_change(self, config):
        mask = difference_mask(solid(0), solid(255), config.blur_kernel, 30)
        assert mask.count() == W * H

    def test_patch_edges_within_blur_reach(self):
        background = PixelBuffer.blank(64, 64)
        frame = PixelBuffer.blank(64, 64)
        frame.data[20:40, 20:40] = 200
        mask = difference_mask(background, frame, 5, 30).data

        assert mask[22:38, 22:38].all()
        outside = np.ones_like(mask)
        outside[18:42, 18:42] = False
        assert not mask[outside].any()

    def test_matches_independent_convolution(self):
        background = PixelBuffer.blank(48, 48)
        frame = PixelBuffer.blank(48, 48)
        frame.data[10:30, 12:32] = 200
        mask = difference_mask(background, frame, 5, 30).data

        # Separable Gaussian applied with numpy on the luma image
        sigma = gaussian_sigma(5)
        taps = np.exp(-(np.arange(-2, 3) ** 2) / (2 * sigma ** 2))
        taps /= taps.sum()
        gray = cv2.cvtColor(frame.data, cv2.COLOR_RGB2GRAY).astype(np.float64)
        padded = np.pad(gray, 2, mode="reflect")
        rows = sum(taps[i] * padded[:, i:i + 48] for i in range(5))
        blurred = sum(taps[i] * rows[i:i + 48, :] for i in range(5))
        expected = blurred > 30.5
        # Rounding inside OpenCV may move a pixel sitting on the threshold
        assert np.count_nonzero(mask != expected) <= 4

    def test_threshold_monotone(self):
        background = solid(50)
        frame = with_patch(50, 120, 4, 4, 10)
        frame.data[0:3, 0:3] = 80
        counts = [difference_mask(background, frame, 5, t).count() for t in (10, 20, 30, 60, 120)]
        assert counts == sorted(counts, reverse=True)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            difference_mask(solid(0), solid(0, height=H + 2), 5, 30)


class TestReferenceMixture:
    """Numpy mixture model."""

    def test_constant_video_no_foreground(self, config):
        model = ReferenceMixture(config)
        for _ in range(100):
            mog_update(model, solid(70))
        assert mog_mask(model, solid(70)).count() == 0

    def test_bright_patch_flagged(self, config):
        model = ReferenceMixture(config)
        for _ in range(30):
            mog_update(model, solid(50))
        mask = mog_mask(model, with_patch(50, 250, 5, 5, 6))
        assert mask.data[5:11, 5:11].all()
        assert mask.count() == 36

    def test_alternating_pixel_stays_background(self, config):
        model = ReferenceMixture(config)
        for i in range(60):
            mog_update(model, solid(50 + i % 2, width=1, height=1))
        assert mog_mask(model, solid(50, width=1, height=1)).count() == 0
        assert mog_mask(model, solid(51, width=1, height=1)).count() == 0

    def test_weights_normalized_after_every_update(self, config):
        rng = np.random.default_rng(3)
        model = ReferenceMixture(config)
        for _ in range(25):
            frame = PixelBuffer(rng.integers(0, 256, size=(6, 5, 3), dtype=np.uint8))
            mog_update(model, frame)
            assert np.allclose(model.weights.sum(axis=1), 1.0, atol=1e-6)
            assert (model.variances[model.weights > 0] >= config.mog_variance_floor).all()

    def test_background_is_dominant_mean(self, config):
        model = ReferenceMixture(config)
        for i in range(40):
            mog_update(model, solid(90) if i % 10 else with_patch(90, 200, 0, 0, 4))
        assert np.all(mog_background(model).data == 90)

    def test_uninitialized(self, config):
        model = ReferenceMixture(config)
        with pytest.raises(BgsWarmupError):
            mog_mask(model, solid(0))
        with pytest.raises(BgsWarmupError):
            mog_background(model)

    def test_dimension_mismatch(self, config):
        model = ReferenceMixture(config)
        mog_update(model, solid(0))
        with pytest.raises(DimensionMismatchError):
            mog_update(model, solid(0, width=W - 1))

    def test_startup_learning_rate(self):
        assert startup_learning_rate(0.005, 1) == 0.5
        assert startup_learning_rate(0.005, 10) == 0.05
        assert startup_learning_rate(0.005, 1000) == 0.005


class TestOpenCVMixture:
    """OpenCV MOG2 engine."""

    def test_constant_video_then_patch(self):
        model = create_mixture(BgsConfig(mog_engine="opencv"))
        for _ in range(50):
            model.update(solid(60))
        assert model.mask(solid(60)).count() == 0
        mask = model.mask(with_patch(60, 240, 8, 8, 6))
        assert mask.data[8:14, 8:14].all()
        assert (mask.width, mask.height) == (W, H)

    def test_segment_requires_update(self):
        model = create_mixture(BgsConfig(mog_engine="opencv"))
        with pytest.raises(BgsWarmupError):
            model.segment(solid(0))


class TestHybrid:
    """Mixture background refreshed periodically, difference masks per frame."""

    def test_refresh_schedule(self, config):
        model = HybridModel.from_config(config)
        for i in range(0, 121, 10):
            hybrid_update(model, solid(30), i)
        assert model.refresh_indices == [0, 50, 100]

    def test_frame_equal_to_background(self, config):
        model = HybridModel.from_config(config)
        hybrid_update(model, solid(30), 0)
        assert hybrid_mask(model, solid(30), config).count() == 0

    def test_object_after_refresh_flagged(self, config):
        model = HybridModel.from_config(config)
        for i in range(0, 51, 10):
            hybrid_update(model, solid(30), i)
        frame = with_patch(30, 220, 10, 6, 10)
        assert not hybrid_update(model, frame, 60)
        mask = hybrid_mask(model, frame, config)
        assert mask.data[8:14, 12:18].all()

    def test_mixture_learns_between_refreshes(self, config):
        model = HybridModel.from_config(config)
        for i in range(0, 40, 10):
            hybrid_update(model, solid(30), i)
        for i in range(40, 50):
            hybrid_update(model, solid(80), i)
        assert model.mixture.updates == 14
        assert np.all(model.background.data == 30)
        assert hybrid_mask(model, solid(80), config).count() == W * H

    def test_refresh_frames_only(self):
        model = HybridModel.from_config(BgsConfig(mog_engine="reference", hybrid_learn_every_frame=False))
        for i in range(0, 121, 10):
            hybrid_update(model, solid(30), i)
        assert model.refresh_indices == [0, 50, 100]
        assert model.mixture.updates == 3

    def test_uninitialized(self, config):
        with pytest.raises(BgsWarmupError):
            hybrid_mask(HybridModel.from_config(config), solid(0), config)


class TestSubtractor:
    """Per-stream subtractor facade."""

    @pytest.mark.parametrize("method", list(BgsMethod))
    @pytest.mark.parametrize("engine", ["reference", "opencv"])
    def test_constant_stream_all_background(self, method, engine):
        subtractor = create_subtractor(BgsConfig(method=method, mog_engine=engine, ptp_sample_skip=1))
        masks = [subtractor.apply(solid(80), i) for i in range(30)]
        produced = [m for m in masks if m is not None]
        assert len(produced) >= 29
        assert all((m.width, m.height) == (W, H) for m in produced)
        assert produced[-1].count() == 0

    @pytest.mark.parametrize("method", list(BgsMethod))
    def test_warmup_frames_return_none(self, method, config):
        subtractor = create_subtractor(config.model_copy(update={"method": method}))
        assert subtractor.apply(solid(10), 0, extract=False) is None
        assert subtractor.apply(solid(10), 10, extract=False) is None
        assert subtractor.apply(solid(10), 20) is not None

    def test_config_validation(self):
        with pytest.raises(ValueError):
            BgsConfig(blur_kernel=4)
        with pytest.raises(ValueError):
            BgsConfig(diff_threshold=0)
        with pytest.raises(ValueError):
            BgsConfig(method="median")

    def test_mask_dumper(self, tmp_path):
        mask = BinaryMask(np.eye(4, dtype=bool))
        path = MaskDumper(tmp_path).dump("cam", 7, mask)
        assert path == tmp_path / "cam" / "000007.png"
        image = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
        assert image.tolist() == (np.eye(4, dtype=np.uint8) * 255).tolist()
