"""Synthetic desk-scale benchmark: clips with a planted, visible corruption level.

Each triplet's edited clip is its source degraded by noise and contrast
loss whose strength is the corruption level c in [0, 1]; the planted MOS is
a deterministic decreasing function of c. A working assessor must recover
the corruption ranking, which makes this set the standard end-to-end
overfit fixture.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .manifest import CATEGORIES, EditTriplet
from .mos import MosEntry, MosTable
from .training import TrainingExample
from .video import VideoClip

_PROMPTS = (
    "turn the scene into a watercolor painting",
    "replace the ball with a red balloon",
    "make the camera orbit the subject",
    "give the video a warm sunset tint",
)


def smooth_random_clip(rng: np.random.Generator, frames: int = 4, height: int = 16,
                       width: int = 16, fps: float = 8.0) -> VideoClip:
    """Low-frequency random content with gentle motion, uint8 RGB."""
    base = rng.uniform(0.2, 0.8, size=(height // 4 + 2, width // 4 + 2, 3))
    big = np.kron(base, np.ones((4, 4, 1)))[:height, :width]
    out = np.empty((frames, height, width, 3))
    for t in range(frames):
        out[t] = np.roll(big, shift=t, axis=1)
        out[t] += 0.02 * np.sin(t + np.arange(width)[None, :, None] / 5.0)
    return VideoClip(frames=np.clip(out * 255, 0, 255).astype(np.uint8), fps=fps)


def corrupt_clip(clip: VideoClip, level: float, rng: np.random.Generator) -> VideoClip:
    """Applies contrast loss and noise proportional to ``level`` in [0, 1]."""
    arr = clip.frames.astype(np.float64) / 255.0
    arr = 0.5 + (arr - 0.5) * (1.0 - 0.6 * level)
    arr = arr + rng.normal(0.0, 0.25 * level, size=arr.shape)
    return VideoClip(frames=np.clip(arr * 255, 0, 255).astype(np.uint8), fps=clip.fps)


def planted_mos(level: float) -> float:
    """The planted ground truth: clean edits score high, corrupted ones low."""
    return float(1.0 - 2.0 * level)


@dataclass(frozen=True)
class SyntheticBenchmark:
    triplets: list[EditTriplet]
    examples: list[TrainingExample]
    mos: MosTable
    corruption_levels: dict[str, float]


def make_corruption_benchmark(n_triplets: int = 32, n_sources: int = 8,
                              frames: int = 4, size: int = 16,
                              seed: int = 0) -> SyntheticBenchmark:
    """Builds the planted-rule set: n_triplets over n_sources source videos."""
    rng = np.random.default_rng(seed)
    sources = {f"src{j:03d}": smooth_random_clip(rng, frames, size, size)
               for j in range(n_sources)}
    triplets, examples, entries, levels = [], [], {}, {}
    for i in range(n_triplets):
        source_id = f"src{i % n_sources:03d}"
        tid = f"syn{i:03d}"
        level = (i % 11) / 10.0 if n_triplets <= 11 else rng.uniform(0.0, 1.0)
        source = sources[source_id]
        edited = corrupt_clip(source, level, rng)
        prompt = _PROMPTS[i % len(_PROMPTS)]
        triplets.append(EditTriplet(
            triplet_id=tid, source_video_id=source_id,
            source_path=f"{source_id}", edited_path=f"{tid}",
            prompt=prompt, source_prompt="the original scene",
            method=f"editor-{i % 4}", category=CATEGORIES[i % 3],
            subcategory="synthetic"))
        target = planted_mos(level)
        examples.append(TrainingExample(
            triplet_id=tid, source=source, edited=edited, prompt=prompt,
            target=target))
        entries[tid] = MosEntry(mos=target, rating_count=1, dispersion=0.0)
        levels[tid] = level
    return SyntheticBenchmark(
        triplets=triplets, examples=examples,
        mos=MosTable(entries=entries), corruption_levels=levels)
