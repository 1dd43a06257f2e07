import numpy as np
import pytest

from editqa.errors import UserInputError
from editqa.metrics import (ConstantFlowBackend, ZeroFlowBackend, bilinear_warp,
                            ssim, warp_mse, warp_pair_mse, warp_ssim)
from editqa.video import VideoClip

from conftest import random_clip, static_clip


def adjacent_mse_oracle(clip: VideoClip) -> float:
    frames = clip.frames.astype(np.float64) / 255.0
    pair_values = []
    for t in range(clip.frame_count - 1):
        pair_values.append(((frames[t] - frames[t + 1]) ** 2).mean())
    return float(np.mean(pair_values))


def test_static_video_zero_flow_is_zero():
    result = warp_mse(static_clip(), ZeroFlowBackend())
    assert result.aggregate == 0.0


def test_zero_flow_equals_adjacent_mse_oracle():
    for seed in range(50):
        clip = random_clip(seed=seed, frames=4, height=16, width=16)
        got = warp_mse(clip, ZeroFlowBackend()).aggregate
        assert got == pytest.approx(adjacent_mse_oracle(clip), abs=1e-9)


def test_true_translation_flow_scores_zero():
    # content shifts 1 pixel right per frame; the true forward flow is (0, 1)
    rng = np.random.default_rng(0)
    base = rng.integers(0, 256, size=(16, 40, 3)).astype(np.uint8)
    frames = np.stack([np.roll(base, shift=t, axis=1) for t in range(4)])
    clip = VideoClip(frames=frames)
    result = warp_mse(clip, ConstantFlowBackend(dy=0.0, dx=1.0))
    assert result.aggregate == pytest.approx(0.0, abs=1e-12)


def test_translation_flow_direction_matters():
    rng = np.random.default_rng(1)
    base = rng.integers(0, 256, size=(16, 40, 3)).astype(np.uint8)
    frames = np.stack([np.roll(base, shift=t, axis=1) for t in range(4)])
    clip = VideoClip(frames=frames)
    wrong = warp_mse(clip, ConstantFlowBackend(dy=0.0, dx=-1.0))
    assert wrong.aggregate > 0.01


def test_warp_ssim_static_zero_flow_is_one():
    result = warp_ssim(static_clip(frames=3, height=16, width=16), ZeroFlowBackend())
    assert result.aggregate == pytest.approx(1.0, abs=1e-12)


def test_warp_ssim_zero_flow_matches_adjacent_ssim_oracle():
    clip = random_clip(seed=5, frames=4, height=24, width=24)
    got = warp_ssim(clip, ZeroFlowBackend()).aggregate
    expected = np.mean([
        ssim(clip.frames[t], clip.frames[t + 1]) for t in range(3)])
    assert got == pytest.approx(expected, abs=1e-12)


def test_out_of_bounds_pixels_excluded():
    # half the frame flows from outside; the in-bounds half must still match
    rng = np.random.default_rng(2)
    base = rng.integers(0, 256, size=(8, 12, 3)).astype(np.uint8)
    shifted = np.roll(base, shift=6, axis=1)
    frames = np.stack([base, shifted])
    clip = VideoClip(frames=frames)
    result = warp_mse(clip, ConstantFlowBackend(dy=0.0, dx=6.0))
    assert result.aggregate == pytest.approx(0.0, abs=1e-12)


def test_all_pixels_out_of_bounds_is_error():
    clip = random_clip(seed=3, frames=2, height=8, width=8)
    with pytest.raises(UserInputError, match="out of bounds"):
        warp_mse(clip, ConstantFlowBackend(dy=100.0, dx=100.0))


def test_flow_shape_mismatch_rejected():
    frame = np.zeros((8, 8, 3), dtype=np.float64)
    with pytest.raises(UserInputError, match="flow shape"):
        bilinear_warp(frame, np.zeros((4, 4, 2)))


def test_bilinear_warp_identity_for_zero_flow():
    rng = np.random.default_rng(4)
    frame = rng.uniform(size=(6, 7, 3))
    warped, mask = bilinear_warp(frame, np.zeros((6, 7, 2)))
    np.testing.assert_allclose(warped, frame, atol=1e-12)
    assert mask.all()


def test_fractional_translation_interpolates():
    # a linear ramp is exactly representable under bilinear interpolation
    ramp = np.tile(np.arange(10, dtype=np.float64)[None, :, None] * 10, (6, 1, 3))
    flow = np.zeros((6, 10, 2))
    flow[..., 1] = 0.5
    warped, mask = bilinear_warp(ramp, flow)
    np.testing.assert_allclose(warped[:, 1:, :], ramp[:, 1:, :] - 5.0, atol=1e-9)


def test_warp_pair_mse_uses_unit_scale():
    a = np.zeros((12, 12, 3), dtype=np.uint8)
    b = np.full((12, 12, 3), 255, dtype=np.uint8)
    value = warp_pair_mse(a, b, np.zeros((12, 12, 2)))
    assert value == pytest.approx(1.0)
