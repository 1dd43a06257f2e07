"""Per-triplet metric computation with dependency resolution.

Resolves composite metrics (s_edit, q_edit) to their base metrics, decodes
and standardizes clips once per triplet, and keeps going past per-triplet
failures so a batch run can report partial results.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import UserInputError
from ..manifest import EditTriplet
from ..video import VideoClip, VideoDecoder, standardize_clip
from . import battery
from .backends import (EmbeddingBackend, FeatureStore, FlowBackend,
                       PerceptualDistanceBackend)


def resolve_metric_names(names: list[str]) -> list[str]:
    """Validates metric names and expands composite dependencies, in run order."""
    unknown = [n for n in names if n not in battery.ALL_METRICS]
    if unknown:
        raise UserInputError(
            f"unknown metric(s) {unknown}; valid names: {sorted(battery.ALL_METRICS)}")
    ordered: list[str] = []

    def add(name: str):
        for dep in battery.COMPOSITE_METRICS.get(name, ()):
            add(dep)
        if name not in ordered:
            ordered.append(name)

    for n in names:
        add(n)
    return ordered


@dataclass
class MetricEngine:
    """Computes metrics for triplets against a fixed set of backends."""

    decoder: VideoDecoder | None = None
    embedder: EmbeddingBackend | None = None
    perceptual: PerceptualDistanceBackend | None = None
    flow: FlowBackend | None = None
    features: FeatureStore | None = None
    _clip_cache: dict[str, VideoClip] = field(default_factory=dict, repr=False)

    def _load_clip(self, path: str) -> VideoClip:
        if path not in self._clip_cache:
            if self.decoder is None:
                raise UserInputError("no video decoder configured")
            self._clip_cache[path] = standardize_clip(self.decoder.decode(path))
        return self._clip_cache[path]

    def _clip_t(self, triplet: EditTriplet) -> battery.MetricResult:
        if self.features is not None:
            return battery.clip_t_from_vectors(
                self.features.frame_vectors(triplet.triplet_id),
                self.features.prompt_vector(triplet.triplet_id))
        if self.embedder is None:
            raise UserInputError("clip_t needs an embedding backend or feature file")
        return battery.clip_t(self._load_clip(triplet.edited_path), triplet.prompt,
                              self.embedder)

    def _clip_f(self, triplet: EditTriplet) -> battery.MetricResult:
        if self.features is not None:
            return battery.clip_f_from_vectors(
                self.features.frame_vectors(triplet.triplet_id))
        if self.embedder is None:
            raise UserInputError("clip_f needs an embedding backend or feature file")
        return battery.clip_f(self._load_clip(triplet.edited_path), self.embedder)

    def _fram_acc(self, triplet: EditTriplet) -> battery.MetricResult:
        if triplet.source_prompt is None:
            raise battery.MetricError(
                f"triplet {triplet.triplet_id!r} has no source_prompt")
        if self.features is not None:
            source_vec = self.features.source_prompt_vector(triplet.triplet_id)
            if source_vec is None:
                raise battery.MetricError(
                    f"feature file has no source-prompt vector for "
                    f"{triplet.triplet_id!r}")
            return battery.fram_acc_from_vectors(
                self.features.frame_vectors(triplet.triplet_id),
                self.features.prompt_vector(triplet.triplet_id), source_vec)
        if self.embedder is None:
            raise UserInputError("fram_acc needs an embedding backend or feature file")
        return battery.fram_acc(self._load_clip(triplet.edited_path), triplet.prompt,
                                triplet.source_prompt, self.embedder)

    def compute(self, triplet: EditTriplet, names: list[str]) -> dict[str, float]:
        """Computes the requested metrics (dependencies included) for one triplet."""
        values: dict[str, float] = {}
        for name in resolve_metric_names(names):
            if name == "clip_t":
                values[name] = self._clip_t(triplet).aggregate
            elif name == "clip_f":
                values[name] = self._clip_f(triplet).aggregate
            elif name == "fram_acc":
                values[name] = self._fram_acc(triplet).aggregate
            elif name == "lpips_p":
                if self.perceptual is None:
                    raise UserInputError("lpips_p needs a perceptual backend")
                values[name] = battery.lpips_p(
                    self._load_clip(triplet.source_path),
                    self._load_clip(triplet.edited_path), self.perceptual).aggregate
            elif name == "lpips_t":
                if self.perceptual is None:
                    raise UserInputError("lpips_t needs a perceptual backend")
                values[name] = battery.lpips_t(
                    self._load_clip(triplet.edited_path), self.perceptual).aggregate
            elif name == "warp_mse":
                if self.flow is None:
                    raise UserInputError("warp_mse needs a flow backend")
                values[name] = battery.warp_mse(
                    self._load_clip(triplet.edited_path), self.flow).aggregate
            elif name == "warp_ssim":
                if self.flow is None:
                    raise UserInputError("warp_ssim needs a flow backend")
                values[name] = battery.warp_ssim(
                    self._load_clip(triplet.edited_path), self.flow).aggregate
            elif name == "s_edit":
                values[name] = battery.s_edit(values["clip_t"], values["warp_mse"])
            elif name == "q_edit":
                values[name] = battery.q_edit(values["warp_ssim"], values["clip_t"])
        return values


def write_metrics_csv(rows: list[tuple[str, str, float]], path: str | Path) -> None:
    """Writes ``triplet_id,metric,aggregate`` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["triplet_id", "metric", "aggregate"])
        for tid, metric, value in rows:
            writer.writerow([tid, metric, repr(float(value))])
