"""
Raster operations shared by the difference-based methods:
grayscale -> Gaussian blur -> absolute difference -> binary threshold.
"""

import cv2
import numpy as np

from ..dataio.models import PixelBuffer
from .models import BinaryMask, GrayBuffer, DimensionMismatchError


def gaussian_sigma(kernel: int) -> float:
    """Sigma used for a blur kernel of the given side."""
    return 0.3 * ((kernel - 1) * 0.5 - 1) + 0.8


def to_gray(pixels: PixelBuffer) -> GrayBuffer:
    """Rec.601 luma (0.299 R + 0.587 G + 0.114 B)."""
    return GrayBuffer(cv2.cvtColor(pixels.data, cv2.COLOR_RGB2GRAY))


def blur(gray: GrayBuffer, kernel: int) -> GrayBuffer:
    """Gaussian blur with reflective borders."""
    if kernel == 1:
        return GrayBuffer(gray.data.copy())
    sigma = gaussian_sigma(kernel)
    return GrayBuffer(cv2.GaussianBlur(
        gray.data, (kernel, kernel), sigmaX=sigma, sigmaY=sigma, borderType=cv2.BORDER_REFLECT_101
    ))


def prepare(pixels: PixelBuffer, kernel: int) -> GrayBuffer:
    """Grayscale then blur."""
    return blur(to_gray(pixels), kernel)


def threshold_difference(background: GrayBuffer, frame: GrayBuffer, diff_threshold: int) -> BinaryMask:
    """Foreground where |background - frame| > diff_threshold (both already blurred)."""
    if background.data.shape != frame.data.shape:
        raise DimensionMismatchError(
            f"Frame {frame.width}x{frame.height} does not match background {background.width}x{background.height}"
        )
    diff = cv2.absdiff(background.data, frame.data)
    _, binary = cv2.threshold(diff, diff_threshold, 255, cv2.THRESH_BINARY)
    return BinaryMask(binary > 0)


def difference_mask(background: PixelBuffer, frame: PixelBuffer, kernel: int, diff_threshold: int) -> BinaryMask:
    """Full difference pipeline between a background image and a frame."""
    return threshold_difference(prepare(background, kernel), prepare(frame, kernel), diff_threshold)


def round_to_pixels(values: np.ndarray) -> PixelBuffer:
    """Round a fractional RGB image to uint8."""
    return PixelBuffer(np.clip(np.rint(values), 0, 255).astype(np.uint8))
