"""Structural similarity on 8-bit luminance.

Standard configuration: 11x11 Gaussian window with sigma 1.5, K1=0.01,
K2=0.03, dynamic range 255, map mean-pooled over windows that fit fully
inside the frame.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import correlate1d

from ..errors import UserInputError

_LUMA = np.array([0.299, 0.587, 0.114])


def to_luminance(frame: np.ndarray) -> np.ndarray:
    """RGB or grayscale frame to float64 luminance on [0, 255]."""
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim == 3 and arr.shape[-1] == 3:
        return arr @ _LUMA
    if arr.ndim == 2:
        return arr
    raise UserInputError(f"expected (H, W) or (H, W, 3) frame, got shape {arr.shape}")


def _gaussian_kernel(window: int, sigma: float) -> np.ndarray:
    half = (window - 1) / 2
    x = np.arange(window) - half
    k = np.exp(-(x**2) / (2 * sigma**2))
    return k / k.sum()


def _windowed_mean(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # Separable Gaussian, then crop to windows fully inside the frame.
    r = kernel.size // 2
    out = correlate1d(img, kernel, axis=0, mode="constant")
    out = correlate1d(out, kernel, axis=1, mode="constant")
    return out[r:img.shape[0] - r, r:img.shape[1] - r]


def ssim_map(frame_a: np.ndarray, frame_b: np.ndarray, *, data_range: float = 255.0,
             window: int = 11, sigma: float = 1.5,
             k1: float = 0.01, k2: float = 0.03) -> np.ndarray:
    """Per-window SSIM map over the valid (fully interior) region."""
    a = to_luminance(frame_a)
    b = to_luminance(frame_b)
    if a.shape != b.shape:
        raise UserInputError(f"frame shape mismatch: {a.shape} vs {b.shape}")
    if min(a.shape) < window:
        raise UserInputError(
            f"frame {a.shape} is smaller than the {window}x{window} SSIM window")
    kernel = _gaussian_kernel(window, sigma)
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2
    mu_a = _windowed_mean(a, kernel)
    mu_b = _windowed_mean(b, kernel)
    var_a = _windowed_mean(a * a, kernel) - mu_a**2
    var_b = _windowed_mean(b * b, kernel) - mu_b**2
    cov = _windowed_mean(a * b, kernel) - mu_a * mu_b
    return ((2 * mu_a * mu_b + c1) * (2 * cov + c2)
            / ((mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)))


def ssim(frame_a: np.ndarray, frame_b: np.ndarray, **kwargs) -> float:
    """Mean SSIM between two frames of equal size."""
    return float(ssim_map(frame_a, frame_b, **kwargs).mean())
