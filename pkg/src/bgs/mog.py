"""
Adaptive per-pixel mixture-of-Gaussians background model.

Two engines share one interface:

- ``ReferenceMixture``: a vectorized numpy model whose update rules are
  spelled out below. Deterministic and easy to inspect in tests.
- ``OpenCVMixture``: OpenCV's MOG2 configured with the same parameters.
  Faster, used by default in runs and benchmarks.

Per pixel, components are ranked by weight / sigma. A pixel matches a
component when its squared RGB distance to the mean is at most
T^2 * variance. The smallest ranked prefix whose cumulative weight reaches
the background ratio models the background. The learning rate at the n-th
update is max(learning_rate, 1 / (2n)), so the model converges quickly from
the first frame and settles on the configured rate.
"""

from abc import ABC, abstractmethod
from typing import Optional, Tuple

import cv2
import numpy as np

from ..dataio.models import PixelBuffer
from ..utils.logging import get_logger
from .imaging import round_to_pixels
from .models import BgsConfig, BgsWarmupError, BinaryMask, DimensionMismatchError

logger = get_logger(__name__)


def startup_learning_rate(learning_rate: float, updates: int) -> float:
    """Learning rate applied at the given (1-based) update."""
    return max(learning_rate, 1.0 / (2 * max(updates, 1)))


class MixtureEngine(ABC):
    """Common interface of the mixture implementations."""

    def __init__(self, config: BgsConfig):
        self.config = config
        self.updates = 0
        self.shape: Optional[Tuple[int, int]] = None

    @property
    def initialized(self) -> bool:
        return self.updates > 0

    def _check_shape(self, frame: PixelBuffer) -> None:
        shape = (frame.height, frame.width)
        if self.shape is None:
            self.shape = shape
        elif shape != self.shape:
            raise DimensionMismatchError(
                f"Frame {frame.width}x{frame.height} does not match model {self.shape[1]}x{self.shape[0]}"
            )

    def _require_initialized(self) -> None:
        if not self.initialized:
            raise BgsWarmupError("Mixture model has not been updated yet")

    @abstractmethod
    def update(self, frame: PixelBuffer) -> None:
        """Fold a frame into the model."""

    @abstractmethod
    def background(self) -> PixelBuffer:
        """Mean of the strongest background component per pixel."""

    @abstractmethod
    def mask(self, frame: PixelBuffer) -> BinaryMask:
        """Classify a frame against the current model without updating it."""

    def segment(self, frame: PixelBuffer) -> BinaryMask:
        """Classify a frame against the model, then update the model with it."""
        result = self.mask(frame)
        self.update(frame)
        return result


class ReferenceMixture(MixtureEngine):
    """Numpy mixture model.

    State per pixel: K weights (float64), K RGB means (float32) and K
    isotropic variances (float32). Components with zero weight are unused.
    """

    def __init__(self, config: BgsConfig):
        super().__init__(config)
        self.weights: Optional[np.ndarray] = None
        self.means: Optional[np.ndarray] = None
        self.variances: Optional[np.ndarray] = None

    def _pixels(self, frame: PixelBuffer) -> np.ndarray:
        return frame.data.reshape(-1, 3).astype(np.float32)

    def _ranking(self) -> np.ndarray:
        score = self.weights / np.sqrt(self.variances)
        return np.argsort(-score, axis=1, kind="stable")

    def _distances(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        diff = x[:, None, :] - self.means
        return diff, np.einsum("nkc,nkc->nk", diff, diff)

    def background_components(self) -> np.ndarray:
        """Boolean (N, K) flags of the components that model the background."""
        self._require_initialized()
        order = self._ranking()
        ranked = np.take_along_axis(self.weights, order, axis=1)
        weight_before = np.cumsum(ranked, axis=1) - ranked
        ranked_flags = (weight_before < self.config.mog_background_ratio) & (ranked > 0)
        flags = np.zeros_like(ranked_flags)
        np.put_along_axis(flags, order, ranked_flags, axis=1)
        return flags

    def update(self, frame: PixelBuffer) -> None:
        self._check_shape(frame)
        cfg = self.config
        x = self._pixels(frame)
        n, k = x.shape[0], cfg.mog_components

        if self.weights is None:
            self.weights = np.zeros((n, k), dtype=np.float64)
            self.weights[:, 0] = 1.0
            self.means = np.zeros((n, k, 3), dtype=np.float32)
            self.means[:, 0] = x
            self.variances = np.full((n, k), cfg.mog_initial_variance, dtype=np.float32)
            self.updates = 1
            return

        self.updates += 1
        alpha = startup_learning_rate(cfg.mog_learning_rate, self.updates)
        threshold2 = cfg.mog_match_threshold ** 2

        diff, dist2 = self._distances(x)
        matches = (self.weights > 0) & (dist2 <= threshold2 * self.variances)

        # First matching component in rank order
        order = self._ranking()
        ranked_matches = np.take_along_axis(matches, order, axis=1)
        matched = ranked_matches.any(axis=1)
        first = order[np.arange(n), ranked_matches.argmax(axis=1)]

        self.weights *= (1.0 - alpha)

        rows = np.nonzero(matched)[0]
        if rows.size:
            comp = first[rows]
            self.weights[rows, comp] += alpha
            rho = np.minimum(1.0, alpha / self.weights[rows, comp]).astype(np.float32)
            self.means[rows, comp] += rho[:, None] * diff[rows, comp]
            variance = self.variances[rows, comp]
            variance += rho * (dist2[rows, comp] - variance)
            self.variances[rows, comp] = np.maximum(variance, cfg.mog_variance_floor)

        rows = np.nonzero(~matched)[0]
        if rows.size:
            # Replace the weakest component (unused ones have weight 0)
            comp = self.weights[rows].argmin(axis=1)
            self.means[rows, comp] = x[rows]
            self.variances[rows, comp] = cfg.mog_initial_variance
            self.weights[rows, comp] = alpha

        self.weights /= self.weights.sum(axis=1, keepdims=True)

    def background(self) -> PixelBuffer:
        flags = self.background_components()
        n = self.weights.shape[0]
        strongest = np.where(flags, self.weights, -1.0).argmax(axis=1)
        values = self.means[np.arange(n), strongest]
        h, w = self.shape
        return round_to_pixels(values.reshape(h, w, 3))

    def mask(self, frame: PixelBuffer) -> BinaryMask:
        self._require_initialized()
        self._check_shape(frame)
        _, dist2 = self._distances(self._pixels(frame))
        threshold2 = self.config.mog_match_threshold ** 2
        background_match = self.background_components() & (dist2 <= threshold2 * self.variances)
        h, w = self.shape
        return BinaryMask(~background_match.any(axis=1).reshape(h, w))


class OpenCVMixture(MixtureEngine):
    """OpenCV MOG2 with shadow detection disabled.

    ``history`` is 1 / learning_rate so OpenCV's automatic rate follows the
    same start-up schedule as the reference model.
    """

    def __init__(self, config: BgsConfig):
        super().__init__(config)
        history = max(1, int(round(1.0 / config.mog_learning_rate)))
        threshold2 = config.mog_match_threshold ** 2
        self._model = cv2.createBackgroundSubtractorMOG2(
            history=history, varThreshold=threshold2, detectShadows=False
        )
        self._model.setNMixtures(config.mog_components)
        self._model.setBackgroundRatio(config.mog_background_ratio)
        self._model.setVarThresholdGen(threshold2)
        self._model.setVarInit(config.mog_initial_variance)
        self._model.setVarMin(config.mog_variance_floor)
        self._model.setVarMax(max(5 * config.mog_initial_variance, config.mog_variance_floor))

    def _apply(self, frame: PixelBuffer, learning_rate: float) -> np.ndarray:
        self._check_shape(frame)
        # The model is fed RGB throughout, so channel order is consistent
        return self._model.apply(frame.data, learningRate=learning_rate)

    def update(self, frame: PixelBuffer) -> None:
        self._apply(frame, -1)
        self.updates += 1

    def segment(self, frame: PixelBuffer) -> BinaryMask:
        self._require_initialized()
        # MOG2 classifies against the model before folding the frame in
        raw = self._apply(frame, -1)
        self.updates += 1
        return BinaryMask(raw > 0)

    def background(self) -> PixelBuffer:
        self._require_initialized()
        image = self._model.getBackgroundImage()
        return PixelBuffer(np.ascontiguousarray(image, dtype=np.uint8))

    def mask(self, frame: PixelBuffer) -> BinaryMask:
        self._require_initialized()
        return BinaryMask(self._apply(frame, 0) > 0)


MOG_ENGINES = {
    "reference": ReferenceMixture,
    "opencv": OpenCVMixture,
}


def create_mixture(config: BgsConfig) -> MixtureEngine:
    """Build the mixture engine named by ``config.mog_engine``."""
    engine = MOG_ENGINES[config.mog_engine](config)
    logger.debug(
        f"Created {config.mog_engine} mixture engine",
        extra={'event_type': 'mixture_created', 'components': config.mog_components}
    )
    return engine


def mog_update(model: MixtureEngine, frame: PixelBuffer) -> None:
    """Fold a frame into a mixture model."""
    model.update(frame)


def mog_mask(model: MixtureEngine, frame: PixelBuffer) -> BinaryMask:
    """Pixels that match no background component.

    Raises:
        BgsWarmupError: If the model has never been updated
    """
    return model.mask(frame)


def mog_background(model: MixtureEngine) -> PixelBuffer:
    """Background image: mean of the strongest background component per pixel.

    Raises:
        BgsWarmupError: If the model has never been updated
    """
    return model.background()
