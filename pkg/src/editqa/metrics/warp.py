"""Flow-based temporal stability: warp each frame onto its successor and compare.

Warping convention: with forward flow F = flow(frame_t, frame_t+1), the
warped frame is built on frame t+1's grid by backward bilinear sampling,
``warped[p] = frame_t[p - F[p]]`` (exact for global translations). Pixels
whose sample location falls outside the frame are excluded from the error
aggregation.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import map_coordinates, minimum_filter

from ..errors import UserInputError
from ..video import VideoClip
from .backends import FlowBackend
from .ssim import ssim_map


def bilinear_warp(frame: np.ndarray, flow: np.ndarray
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Samples ``frame`` at (p - flow[p]); returns (warped, in_bounds_mask).

    ``frame`` is float (H, W, C) or (H, W); ``flow`` is (H, W, 2) as (dy, dx).
    """
    h, w = frame.shape[:2]
    if flow.shape != (h, w, 2):
        raise UserInputError(
            f"flow shape {flow.shape} does not match frame spatial dims {(h, w)}")
    ys, xs = np.meshgrid(np.arange(h, dtype=np.float64),
                         np.arange(w, dtype=np.float64), indexing="ij")
    sample_y = ys - flow[..., 0]
    sample_x = xs - flow[..., 1]
    mask = ((sample_y >= 0) & (sample_y <= h - 1)
            & (sample_x >= 0) & (sample_x <= w - 1))
    coords = np.stack([sample_y, sample_x])
    if frame.ndim == 2:
        warped = map_coordinates(frame, coords, order=1, mode="nearest")
    else:
        warped = np.stack([
            map_coordinates(frame[..., c], coords, order=1, mode="nearest")
            for c in range(frame.shape[2])
        ], axis=-1)
    return warped, mask


def warp_pair_mse(frame_t: np.ndarray, frame_t1: np.ndarray,
                  flow: np.ndarray) -> float:
    """MSE between warped frame t and frame t+1 on [0, 1] RGB, in-bounds only."""
    a = np.asarray(frame_t, dtype=np.float64) / 255.0
    b = np.asarray(frame_t1, dtype=np.float64) / 255.0
    warped, mask = bilinear_warp(a, flow)
    if not mask.any():
        raise UserInputError("all warped pixels fall out of bounds")
    diff = (warped - b) ** 2
    if diff.ndim == 3:
        diff = diff.mean(axis=-1)
    return float(diff[mask].mean())


def warp_pair_ssim(frame_t: np.ndarray, frame_t1: np.ndarray, flow: np.ndarray,
                   window: int = 11) -> float:
    """SSIM between warped frame t and frame t+1, over fully in-bounds windows."""
    a = np.asarray(frame_t, dtype=np.float64)
    warped, mask = bilinear_warp(a, flow)
    smap = ssim_map(warped, np.asarray(frame_t1, dtype=np.float64), window=window)
    r = window // 2
    # A window is usable only if every pixel in it is in bounds.
    window_ok = minimum_filter(mask.astype(np.uint8), size=window,
                               mode="constant", cval=0)
    window_ok = window_ok[r:mask.shape[0] - r, r:mask.shape[1] - r].astype(bool)
    if not window_ok.any():
        raise UserInputError("no SSIM window is fully in bounds after warping")
    return float(smap[window_ok].mean())


def _per_pair(clip: VideoClip, flow_backend: FlowBackend, fn) -> list[float]:
    frames = clip.frames
    values = []
    for t in range(clip.frame_count - 1):
        flow = np.asarray(flow_backend.flow(frames[t], frames[t + 1]), dtype=np.float64)
        values.append(fn(frames[t], frames[t + 1], flow))
    return values


def warp_mse_values(clip: VideoClip, flow_backend: FlowBackend) -> list[float]:
    return _per_pair(clip, flow_backend, warp_pair_mse)


def warp_ssim_values(clip: VideoClip, flow_backend: FlowBackend) -> list[float]:
    return _per_pair(clip, flow_backend, warp_pair_ssim)
