"""The objective metric battery over pluggable backends.

Each operation returns a MetricResult carrying per-frame values (where the
metric has them) and the aggregate, which is always the arithmetic mean of
the per-frame values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import UserInputError
from ..video import VideoClip
from .backends import EmbeddingBackend, FlowBackend, PerceptualDistanceBackend
from .ssim import ssim
from .warp import warp_mse_values, warp_ssim_values


class MetricError(UserInputError):
    """Metric computation failure, annotated with its frame index when known."""

    def __init__(self, message: str, frame_index: int | None = None):
        locus = f"frame {frame_index}: " if frame_index is not None else ""
        super().__init__(f"{locus}{message}")
        self.frame_index = frame_index


@dataclass(frozen=True)
class MetricResult:
    metric_name: str
    aggregate: float
    per_frame: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.per_frame is not None:
            mean = float(np.mean(self.per_frame))
            if not math.isclose(mean, self.aggregate, rel_tol=0, abs_tol=1e-12):
                raise ValueError(
                    f"{self.metric_name}: aggregate {self.aggregate} is not the mean "
                    f"of per_frame values ({mean})")


def _result(name: str, values: list[float]) -> MetricResult:
    return MetricResult(metric_name=name, aggregate=float(np.mean(values)),
                        per_frame=tuple(float(v) for v in values))


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise MetricError("cannot take cosine of a zero vector")
    return float(np.dot(a, b) / (na * nb))


def _embed_frames(clip: VideoClip, backend: EmbeddingBackend) -> list[np.ndarray]:
    vectors = []
    for i, frame in enumerate(clip.frames):
        try:
            vectors.append(np.asarray(backend.embed_image(frame), dtype=np.float64))
        except Exception as exc:
            raise MetricError(f"embedding backend failed: {exc}", frame_index=i) from exc
    return vectors


def clip_t_from_vectors(frame_vectors, prompt_vector) -> MetricResult:
    """Mean frame-prompt cosine from precomputed embeddings."""
    frame_vectors = [np.asarray(v, dtype=np.float64) for v in frame_vectors]
    if not frame_vectors:
        raise MetricError("need at least one frame vector")
    prompt_vector = np.asarray(prompt_vector, dtype=np.float64)
    return _result("clip_t", [_cosine(v, prompt_vector) for v in frame_vectors])


def clip_t(edited: VideoClip, prompt: str, backend: EmbeddingBackend) -> MetricResult:
    """Mean cosine similarity between each edited frame and the prompt."""
    if not prompt:
        raise MetricError("prompt must be non-empty")
    return clip_t_from_vectors(_embed_frames(edited, backend),
                               backend.embed_text(prompt))


def clip_f_from_vectors(frame_vectors) -> MetricResult:
    """Mean adjacent-frame cosine from precomputed embeddings."""
    frame_vectors = [np.asarray(v, dtype=np.float64) for v in frame_vectors]
    if len(frame_vectors) < 2:
        raise MetricError("frame-consistency needs at least 2 frames")
    values = [_cosine(frame_vectors[t], frame_vectors[t + 1])
              for t in range(len(frame_vectors) - 1)]
    return _result("clip_f", values)


def clip_f(edited: VideoClip, backend: EmbeddingBackend) -> MetricResult:
    """Mean cosine similarity between consecutive edited frames."""
    return clip_f_from_vectors(_embed_frames(edited, backend))


def fram_acc_from_vectors(frame_vectors, target_vector, source_vector) -> MetricResult:
    """Fraction of frames strictly closer to the target text; ties count as failure."""
    frame_vectors = [np.asarray(v, dtype=np.float64) for v in frame_vectors]
    if not frame_vectors:
        raise MetricError("need at least one frame vector")
    values = [
        1.0 if _cosine(v, np.asarray(target_vector, dtype=np.float64))
        > _cosine(v, np.asarray(source_vector, dtype=np.float64)) else 0.0
        for v in frame_vectors
    ]
    return _result("fram_acc", values)


def fram_acc(edited: VideoClip, target_prompt: str, source_prompt: str | None,
             backend: EmbeddingBackend) -> MetricResult:
    """Frame accuracy: target prompt beats source prompt per frame."""
    if not target_prompt:
        raise MetricError("target prompt must be non-empty")
    if not source_prompt:
        raise MetricError("fram_acc needs the triplet's source_prompt")
    return fram_acc_from_vectors(_embed_frames(edited, backend),
                                 backend.embed_text(target_prompt),
                                 backend.embed_text(source_prompt))


def lpips_p(source: VideoClip, edited: VideoClip,
            backend: PerceptualDistanceBackend) -> MetricResult:
    """Mean perceptual distance between source and edited frames, index-aligned."""
    if source.frame_count != edited.frame_count:
        raise MetricError(
            f"frame count mismatch: source {source.frame_count} vs edited "
            f"{edited.frame_count}")
    if source.frames.shape[1:] != edited.frames.shape[1:]:
        raise MetricError(
            f"frame shape mismatch: {source.frames.shape[1:]} vs "
            f"{edited.frames.shape[1:]}")
    values = []
    for t in range(source.frame_count):
        try:
            values.append(float(backend.distance(source.frames[t], edited.frames[t])))
        except Exception as exc:
            raise MetricError(f"perceptual backend failed: {exc}", frame_index=t) from exc
    return _result("lpips_p", values)


def lpips_t(edited: VideoClip, backend: PerceptualDistanceBackend) -> MetricResult:
    """Mean perceptual distance between adjacent edited frames."""
    values = []
    for t in range(edited.frame_count - 1):
        try:
            values.append(float(backend.distance(edited.frames[t], edited.frames[t + 1])))
        except Exception as exc:
            raise MetricError(f"perceptual backend failed: {exc}", frame_index=t) from exc
    return _result("lpips_t", values)


def warp_mse(edited: VideoClip, flow_backend: FlowBackend) -> MetricResult:
    """Mean MSE between flow-warped frames and their successors ([0, 1] RGB)."""
    return _result("warp_mse", warp_mse_values(edited, flow_backend))


def warp_ssim(edited: VideoClip, flow_backend: FlowBackend) -> MetricResult:
    """Mean SSIM between flow-warped frames and their successors."""
    return _result("warp_ssim", warp_ssim_values(edited, flow_backend))


def s_edit(clip_t_value: float, warp_mse_value: float) -> float:
    """Composite alignment-vs-stability score: CLIP-T divided by Warp-MSE."""
    if warp_mse_value <= 0:
        raise MetricError(
            f"s_edit needs a positive warp-MSE denominator, got {warp_mse_value}")
    return clip_t_value / warp_mse_value


def q_edit(warp_ssim_value: float, clip_t_value: float) -> float:
    """Composite score: Warp-SSIM multiplied by CLIP-T."""
    if not (math.isfinite(warp_ssim_value) and math.isfinite(clip_t_value)):
        raise MetricError("q_edit inputs must be finite")
    return warp_ssim_value * clip_t_value


# Metric registry for the engine/CLI: name -> direct dependencies.
BASE_METRICS = ("clip_t", "clip_f", "fram_acc", "lpips_p", "lpips_t",
                "warp_mse", "warp_ssim")
COMPOSITE_METRICS: dict[str, tuple[str, ...]] = {
    "s_edit": ("clip_t", "warp_mse"),
    "q_edit": ("warp_ssim", "clip_t"),
}
ALL_METRICS = BASE_METRICS + tuple(COMPOSITE_METRICS)

__all__ = [
    "MetricError", "MetricResult", "ssim",
    "clip_t", "clip_f", "fram_acc", "lpips_p", "lpips_t",
    "clip_t_from_vectors", "clip_f_from_vectors", "fram_acc_from_vectors",
    "warp_mse", "warp_ssim", "s_edit", "q_edit",
    "BASE_METRICS", "COMPOSITE_METRICS", "ALL_METRICS",
]
