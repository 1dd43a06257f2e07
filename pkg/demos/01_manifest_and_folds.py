"""Build a benchmark manifest on disk, validate it, and split it into folds.

Run: python demos/01_manifest_and_folds.py
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from editqa.manifest import dataset_stats, load_manifest, make_folds
from editqa.video import VideoClip, default_decoder, save_frame_directory, standardize_clip

workdir = Path(tempfile.mkdtemp(prefix="editqa-demo-"))
rng = np.random.default_rng(0)

# Lay out a tiny benchmark: 6 source videos, 12 edited results.
records = []
categories = ("style", "semantic", "structural")
for i in range(12):
    source_id = f"src{i % 6}"
    for clip_dir in (source_id, f"edit{i}"):
        if not (workdir / clip_dir).exists():
            frames = rng.integers(0, 256, size=(6, 24, 32, 3), dtype=np.uint8)
            save_frame_directory(VideoClip(frames=frames), workdir / clip_dir)
    records.append({
        "triplet_id": f"t{i:02d}",
        "source_video_id": source_id,
        "source_path": source_id,
        "edited_path": f"edit{i}",
        "prompt": f"example prompt {i}",
        "method": f"editor-{i % 3}",
        "category": categories[i % 3],
    })
manifest_path = workdir / "manifest.json"
manifest_path.write_text(json.dumps(records, indent=2))

triplets = load_manifest(manifest_path)
print(f"loaded {len(triplets)} triplets from {manifest_path}")

stats = dataset_stats(triplets)
print("category counts:", stats.by_category)
print("method counts:  ", stats.by_method)

# Clips decode through the pluggable decoder and standardize to <= 32 frames,
# long side <= 768.
clip = standardize_clip(default_decoder().decode(triplets[0].edited_path))
print(f"first edited clip: {clip.frame_count} frames of {clip.width}x{clip.height}")

# Folds partition SOURCE videos, so no source ever straddles train/test.
split = make_folds(triplets, k=3, seed=7)
for fold in range(split.k):
    train, held = split.split(triplets, fold)
    held_sources = {t.source_video_id for t in held}
    train_sources = {t.source_video_id for t in train}
    assert held_sources.isdisjoint(train_sources)
    print(f"fold {fold}: train={len(train)} held-out={len(held)} "
          f"held sources={sorted(held_sources)}")
