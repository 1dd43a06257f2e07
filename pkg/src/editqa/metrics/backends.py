"""Pluggable backends for the objective metric battery.

Three interfaces: embedding (image/text to unit vectors), perceptual
distance (frame pair to non-negative scalar), and dense optical flow.
Deterministic stub backends ship for tests and offline runs; reference
backends that load pretrained weights sit behind the same interfaces and
are optional.

Flow convention: ``flow(frame_t, frame_t1)[y, x] = (dy, dx)`` is the
displacement of the content at (y, x) in frame t to its position in
frame t+1 (forward flow).
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from ..errors import UserInputError


@runtime_checkable
class EmbeddingBackend(Protocol):
    """Maps frames and texts into one shared unit-norm embedding space."""

    shareable: bool

    def embed_image(self, frame: np.ndarray) -> np.ndarray: ...

    def embed_text(self, text: str) -> np.ndarray: ...


@runtime_checkable
class PerceptualDistanceBackend(Protocol):
    """Symmetric non-negative frame distance with distance(x, x) == 0."""

    shareable: bool

    def distance(self, frame_a: np.ndarray, frame_b: np.ndarray) -> float: ...


@runtime_checkable
class FlowBackend(Protocol):
    """Dense forward flow between consecutive frames, shape (H, W, 2) as (dy, dx)."""

    shareable: bool

    def flow(self, frame_t: np.ndarray, frame_t1: np.ndarray) -> np.ndarray: ...


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cannot normalize a zero vector")
    return v / n


class HashEmbeddingBackend:
    """Deterministic stub: hash-seeded gaussian unit vectors.

    Identical inputs map to identical vectors, so static clips score
    adjacent-frame similarity 1.0.
    """

    shareable = True

    def __init__(self, dim: int = 32, seed: int = 0):
        self.dim = dim
        self.seed = seed

    def _vector(self, payload: bytes) -> np.ndarray:
        digest = hashlib.sha256(payload + self.seed.to_bytes(8, "little")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        return _unit(rng.standard_normal(self.dim))

    def embed_image(self, frame: np.ndarray) -> np.ndarray:
        arr = np.ascontiguousarray(frame)
        return self._vector(arr.tobytes() + str(arr.shape).encode())

    def embed_text(self, text: str) -> np.ndarray:
        return self._vector(b"text:" + text.encode())


class PixelDistanceBackend:
    """Stub perceptual distance: mean absolute difference on [0, 1] RGB."""

    shareable = True

    def distance(self, frame_a: np.ndarray, frame_b: np.ndarray) -> float:
        if frame_a.shape != frame_b.shape:
            raise UserInputError(
                f"frame shape mismatch: {frame_a.shape} vs {frame_b.shape}")
        a = np.asarray(frame_a, dtype=np.float64) / 255.0
        b = np.asarray(frame_b, dtype=np.float64) / 255.0
        return float(np.mean(np.abs(a - b)))


class ZeroFlowBackend:
    """Stub flow: every pixel is static."""

    shareable = True

    def flow(self, frame_t: np.ndarray, frame_t1: np.ndarray) -> np.ndarray:
        h, w = frame_t.shape[:2]
        return np.zeros((h, w, 2), dtype=np.float64)


class ConstantFlowBackend:
    """Uniform translation flow, useful for synthetic-motion checks."""

    shareable = True

    def __init__(self, dy: float, dx: float):
        self.dy = dy
        self.dx = dx

    def flow(self, frame_t: np.ndarray, frame_t1: np.ndarray) -> np.ndarray:
        h, w = frame_t.shape[:2]
        out = np.empty((h, w, 2), dtype=np.float64)
        out[..., 0] = self.dy
        out[..., 1] = self.dx
        return out


class FarnebackFlowBackend:
    """Dense flow via OpenCV's Farneback estimator; no pretrained weights needed."""

    shareable = False  # cv2 state is confined to one worker

    def __init__(self, **params):
        self.params = {"pyr_scale": 0.5, "levels": 3, "winsize": 15, "iterations": 3,
                       "poly_n": 5, "poly_sigma": 1.2, "flags": 0, **params}

    def flow(self, frame_t: np.ndarray, frame_t1: np.ndarray) -> np.ndarray:
        import cv2
        gray_t = cv2.cvtColor(frame_t, cv2.COLOR_RGB2GRAY)
        gray_t1 = cv2.cvtColor(frame_t1, cv2.COLOR_RGB2GRAY)
        flow_xy = cv2.calcOpticalFlowFarneback(gray_t, gray_t1, None, **self.params)
        return flow_xy[..., ::-1].astype(np.float64)  # (dx, dy) -> (dy, dx)


class ClipEmbeddingBackend:
    """CLIP-style embedder via transformers; needs locally cached weights.

    Not exercised in CI: construction fails with a clear message when the
    checkpoint is unavailable.
    """

    shareable = False

    def __init__(self, model_name: str = "openai/clip-vit-base-patch32",
                 device: str = "cpu"):
        try:
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:  # pragma: no cover
            raise UserInputError("transformers is required for the CLIP backend") from exc
        try:
            self._model = CLIPModel.from_pretrained(model_name).to(device).eval()
            self._processor = CLIPProcessor.from_pretrained(model_name)
        except Exception as exc:  # pragma: no cover - needs downloaded weights
            raise UserInputError(
                f"could not load CLIP weights {model_name!r}; download them into the "
                f"local cache first") from exc
        self._device = device

    def embed_image(self, frame: np.ndarray) -> np.ndarray:  # pragma: no cover
        import torch
        inputs = self._processor(images=frame, return_tensors="pt").to(self._device)
        with torch.no_grad():
            feats = self._model.get_image_features(**inputs)[0].cpu().numpy()
        return _unit(feats.astype(np.float64))

    def embed_text(self, text: str) -> np.ndarray:  # pragma: no cover
        import torch
        inputs = self._processor(text=[text], return_tensors="pt",
                                 padding=True, truncation=True).to(self._device)
        with torch.no_grad():
            feats = self._model.get_text_features(**inputs)[0].cpu().numpy()
        return _unit(feats.astype(np.float64))


PROMPT_FRAME_INDEX = -1
SOURCE_PROMPT_FRAME_INDEX = -2


class FeatureStore:
    """Precomputed embeddings from a JSON-lines file.

    Records are ``{"triplet_id": ..., "frame_index": ..., "vector": [...]}``.
    Frame indices >= 0 are edited-video frames; -1 carries the editing-prompt
    vector and -2 the source-prompt vector.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._frames: dict[str, dict[int, np.ndarray]] = {}
        self._prompts: dict[tuple[str, int], np.ndarray] = {}
        with open(self.path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    tid = str(rec["triplet_id"])
                    idx = int(rec["frame_index"])
                    vec = np.asarray(rec["vector"], dtype=np.float64)
                except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                    raise UserInputError(f"{self.path} line {lineno}: {exc}")
                if vec.ndim != 1 or vec.size == 0:
                    raise UserInputError(
                        f"{self.path} line {lineno}: vector must be a non-empty list")
                if idx >= 0:
                    self._frames.setdefault(tid, {})[idx] = vec
                elif idx in (PROMPT_FRAME_INDEX, SOURCE_PROMPT_FRAME_INDEX):
                    self._prompts[(tid, idx)] = vec
                else:
                    raise UserInputError(
                        f"{self.path} line {lineno}: unknown frame_index {idx}")

    def triplet_ids(self) -> list[str]:
        return sorted(self._frames)

    def frame_vectors(self, triplet_id: str) -> np.ndarray:
        if triplet_id not in self._frames:
            raise UserInputError(f"no frame vectors stored for triplet {triplet_id!r}")
        by_index = self._frames[triplet_id]
        expected = list(range(len(by_index)))
        if sorted(by_index) != expected:
            raise UserInputError(
                f"triplet {triplet_id!r} has gaps in frame indices: {sorted(by_index)}")
        return np.stack([by_index[i] for i in expected])

    def prompt_vector(self, triplet_id: str) -> np.ndarray:
        key = (triplet_id, PROMPT_FRAME_INDEX)
        if key not in self._prompts:
            raise UserInputError(f"no prompt vector stored for triplet {triplet_id!r}")
        return self._prompts[key]

    def source_prompt_vector(self, triplet_id: str) -> np.ndarray | None:
        return self._prompts.get((triplet_id, SOURCE_PROMPT_FRAME_INDEX))


def write_feature_file(path: str | Path,
                       frames: dict[str, np.ndarray],
                       prompts: dict[str, np.ndarray] | None = None,
                       source_prompts: dict[str, np.ndarray] | None = None) -> None:
    """Writes a FeatureStore-compatible JSON-lines file."""
    with open(path, "w") as fh:
        for tid, vecs in frames.items():
            for i, vec in enumerate(np.asarray(vecs)):
                fh.write(json.dumps({"triplet_id": tid, "frame_index": i,
                                     "vector": [float(x) for x in vec]}) + "\n")
        for idx, table in ((PROMPT_FRAME_INDEX, prompts or {}),
                           (SOURCE_PROMPT_FRAME_INDEX, source_prompts or {})):
            for tid, vec in table.items():
                fh.write(json.dumps({"triplet_id": tid, "frame_index": idx,
                                     "vector": [float(x) for x in np.asarray(vec)]}) + "\n")
