import numpy as np
import pytest

from editqa.video import (FrameDirectoryDecoder, VideoClip, VideoError,
                          default_decoder, save_frame_directory, standardize_clip)

from conftest import random_clip


def test_standardize_trims_and_resizes():
    frames = np.random.default_rng(0).integers(
        0, 256, size=(48, 1080, 1920, 3), dtype=np.uint8)
    out = standardize_clip(VideoClip(frames=frames))
    assert out.frame_count == 32
    # 1920x1080 with a 768 long side: 1080 * 768 / 1920 = 432
    assert (out.width, out.height) == (768, 432)


def test_standardize_keeps_first_frames():
    frames = np.zeros((40, 8, 8, 3), dtype=np.uint8)
    for t in range(40):
        frames[t] = t
    out = standardize_clip(VideoClip(frames=frames))
    assert out.frames[-1, 0, 0, 0] == 31


def test_standardize_conforming_clip_unchanged():
    clip = VideoClip(frames=np.zeros((16, 360, 640, 3), dtype=np.uint8))
    assert standardize_clip(clip) is clip


def test_standardize_is_idempotent():
    clip = VideoClip(frames=np.random.default_rng(1).integers(
        0, 256, size=(40, 100, 900, 3), dtype=np.uint8))
    once = standardize_clip(clip)
    twice = standardize_clip(once)
    assert twice is once


def test_single_frame_clip_rejected():
    with pytest.raises(VideoError):
        VideoClip(frames=np.zeros((1, 8, 8, 3), dtype=np.uint8))


def test_clip_shape_validation():
    with pytest.raises(VideoError):
        VideoClip(frames=np.zeros((4, 8, 8), dtype=np.uint8))
    with pytest.raises(VideoError):
        VideoClip(frames=np.zeros((4, 8, 8, 3), dtype=np.float32))


def test_frame_directory_round_trip(tmp_path):
    clip = random_clip(seed=3, frames=5, height=12, width=10)
    save_frame_directory(clip, tmp_path / "clip")
    loaded = FrameDirectoryDecoder().decode(tmp_path / "clip")
    assert loaded.frames.shape == clip.frames.shape
    np.testing.assert_array_equal(loaded.frames, clip.frames)
    assert loaded.fps == clip.fps


def test_frame_directory_needs_two_frames(tmp_path):
    d = tmp_path / "one"
    d.mkdir()
    from PIL import Image
    Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(d / "0.png")
    with pytest.raises(VideoError):
        FrameDirectoryDecoder().decode(d)


def test_frame_directory_rejects_inconsistent_shapes(tmp_path):
    d = tmp_path / "bad"
    d.mkdir()
    from PIL import Image
    Image.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(d / "0.png")
    Image.fromarray(np.zeros((6, 4, 3), dtype=np.uint8)).save(d / "1.png")
    with pytest.raises(VideoError):
        FrameDirectoryDecoder().decode(d)


def test_auto_decoder_dispatches_directories(tmp_path):
    clip = random_clip(seed=4)
    save_frame_directory(clip, tmp_path / "clip")
    loaded = default_decoder().decode(tmp_path / "clip")
    np.testing.assert_array_equal(loaded.frames, clip.frames)
