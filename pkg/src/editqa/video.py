"""Video clip container, decoders, and spatial/temporal standardization.

Clips are plain uint8 RGB arrays of shape (frames, height, width, 3).
Decoding is an interface: the frame-directory decoder has no codec
dependencies and is what the test suite uses; container files go through
OpenCV when it is installed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np
from PIL import Image

from .errors import UserInputError

MAX_FRAMES = 32
MAX_LONG_SIDE = 768
DEFAULT_FPS = 8.0

_FRAME_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp"}


class VideoError(UserInputError):
    """Undecodable or structurally invalid video data."""


@dataclass(frozen=True)
class VideoClip:
    """Ordered RGB frames plus playback rate."""

    frames: np.ndarray
    fps: float = DEFAULT_FPS

    def __post_init__(self):
        f = self.frames
        if f.ndim != 4 or f.shape[-1] != 3:
            raise VideoError(f"frames must have shape (T, H, W, 3), got {f.shape}")
        if f.dtype != np.uint8:
            raise VideoError(f"frames must be uint8, got {f.dtype}")
        if f.shape[0] < 2:
            raise VideoError(f"a clip needs at least 2 frames, got {f.shape[0]}")
        if self.fps <= 0:
            raise VideoError(f"fps must be positive, got {self.fps}")

    @property
    def frame_count(self) -> int:
        return int(self.frames.shape[0])

    @property
    def height(self) -> int:
        return int(self.frames.shape[1])

    @property
    def width(self) -> int:
        return int(self.frames.shape[2])

    @property
    def long_side(self) -> int:
        return max(self.height, self.width)


def standardize_clip(clip: VideoClip, max_frames: int = MAX_FRAMES,
                     max_long_side: int = MAX_LONG_SIDE) -> VideoClip:
    """Trim to the first ``max_frames`` frames and cap the long side.

    Resizing is bilinear and aspect-preserving. Clips that already conform
    are returned unchanged (same object), which makes the operation
    idempotent.
    """
    if clip.frame_count <= max_frames and clip.long_side <= max_long_side:
        return clip
    frames = clip.frames[:max_frames]
    h, w = frames.shape[1:3]
    if max(h, w) > max_long_side:
        scale = max_long_side / max(h, w)
        new_w = max_long_side if w >= h else max(1, round(w * scale))
        new_h = max_long_side if h > w else max(1, round(h * scale))
        resized = np.stack([
            np.asarray(Image.fromarray(frame).resize((new_w, new_h), Image.BILINEAR))
            for frame in frames
        ])
        frames = resized
    return VideoClip(frames=np.ascontiguousarray(frames), fps=clip.fps)


@runtime_checkable
class VideoDecoder(Protocol):
    """Turns a path into a VideoClip."""

    def decode(self, path: str | Path) -> VideoClip: ...


class FrameDirectoryDecoder:
    """Decodes a directory of image files, sorted by filename.

    An optional ``clip.json`` sidecar in the directory may carry ``{"fps": ...}``.
    """

    def decode(self, path: str | Path) -> VideoClip:
        path = Path(path)
        if not path.is_dir():
            raise VideoError(f"not a frame directory: {path}")
        files = sorted(p for p in path.iterdir() if p.suffix.lower() in _FRAME_SUFFIXES)
        if len(files) < 2:
            raise VideoError(f"frame directory {path} holds {len(files)} frames, need >= 2")
        frames = []
        for p in files:
            frames.append(np.asarray(Image.open(p).convert("RGB"), dtype=np.uint8))
        shapes = {f.shape for f in frames}
        if len(shapes) != 1:
            raise VideoError(f"inconsistent frame shapes in {path}: {sorted(shapes)}")
        fps = DEFAULT_FPS
        meta = path / "clip.json"
        if meta.exists():
            fps = float(json.loads(meta.read_text()).get("fps", DEFAULT_FPS))
        return VideoClip(frames=np.stack(frames), fps=fps)


class ContainerVideoDecoder:
    """Decodes container formats (mp4, avi, ...) through OpenCV."""

    def decode(self, path: str | Path) -> VideoClip:
        try:
            import cv2
        except ImportError as exc:  # pragma: no cover - optional dependency
            raise VideoError(
                "container decoding needs opencv-python; install the 'video' extra"
            ) from exc
        path = Path(path)
        if not path.is_file():
            raise VideoError(f"no such video file: {path}")
        cap = cv2.VideoCapture(str(path))
        frames = []
        while True:
            ok, frame = cap.read()
            if not ok:
                break
            frames.append(frame[:, :, ::-1].copy())  # BGR -> RGB
        fps = cap.get(cv2.CAP_PROP_FPS) or DEFAULT_FPS
        cap.release()
        if len(frames) < 2:
            raise VideoError(f"decoded {len(frames)} frames from {path}, need >= 2")
        return VideoClip(frames=np.stack(frames).astype(np.uint8), fps=float(fps))


@dataclass
class AutoDecoder:
    """Dispatches directories to the frame decoder and files to the container decoder."""

    frame_decoder: FrameDirectoryDecoder = field(default_factory=FrameDirectoryDecoder)
    container_decoder: ContainerVideoDecoder = field(default_factory=ContainerVideoDecoder)

    def decode(self, path: str | Path) -> VideoClip:
        path = Path(path)
        if path.is_dir():
            return self.frame_decoder.decode(path)
        return self.container_decoder.decode(path)


def default_decoder() -> AutoDecoder:
    return AutoDecoder()


def save_frame_directory(clip: VideoClip, path: str | Path) -> Path:
    """Writes a clip as numbered PNG frames plus a clip.json sidecar."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(clip.frames):
        Image.fromarray(frame).save(path / f"{i:05d}.png")
    (path / "clip.json").write_text(json.dumps({"fps": clip.fps}))
    return path
