"""Shared fixtures: tiny clips, on-disk manifests, and acceptance reporting."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from editqa.manifest import EditTriplet
from editqa.video import VideoClip, save_frame_directory

# One pass/fail line per acceptance criterion, printed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_clip(seed: int = 0, frames: int = 4, height: int = 16,
                width: int = 16) -> VideoClip:
    rng = np.random.default_rng(seed)
    data = rng.integers(0, 256, size=(frames, height, width, 3), dtype=np.uint8)
    return VideoClip(frames=data)


def static_clip(value: int = 128, frames: int = 4, height: int = 16,
                width: int = 16) -> VideoClip:
    data = np.full((frames, height, width, 3), value, dtype=np.uint8)
    return VideoClip(frames=data)


@pytest.fixture
def tiny_clip() -> VideoClip:
    return random_clip(seed=7)


def write_disk_benchmark(root: Path, n_triplets: int = 4, n_sources: int = 2,
                         seed: int = 0) -> Path:
    """Writes frame-directory clips plus a manifest.json; returns the manifest path."""
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)
    records = []
    categories = ("style", "semantic", "structural")
    for i in range(n_triplets):
        source_id = f"src{i % n_sources}"
        source_dir = root / source_id
        if not source_dir.exists():
            data = rng.integers(0, 256, size=(4, 16, 16, 3), dtype=np.uint8)
            save_frame_directory(VideoClip(frames=data), source_dir)
        edited_dir = root / f"edit{i}"
        data = rng.integers(0, 256, size=(4, 16, 16, 3), dtype=np.uint8)
        save_frame_directory(VideoClip(frames=data), edited_dir)
        records.append({
            "triplet_id": f"t{i}",
            "source_video_id": source_id,
            "source_path": source_id,
            "edited_path": f"edit{i}",
            "prompt": f"prompt {i}",
            "source_prompt": f"source description {i}",
            "method": f"m{i % 2}",
            "category": categories[i % 3],
        })
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps(records, indent=2))
    return manifest_path


def make_triplet(i: int = 0, source: str | None = None, **overrides) -> EditTriplet:
    fields = {
        "triplet_id": f"t{i}",
        "source_video_id": source or f"src{i}",
        "source_path": f"/videos/src{i}",
        "edited_path": f"/videos/edit{i}",
        "prompt": f"prompt {i}",
        "method": "m0",
        "category": "style",
    }
    fields.update(overrides)
    return EditTriplet(**fields)
