"""Benchmark data inventory: edit triplets, fold splits, and dataset statistics.

A manifest is a JSON array of records with keys exactly
``{triplet_id, source_video_id, source_path, edited_path, prompt,
source_prompt?, method, category, subcategory?}``. Paths are stored
relative to the manifest file and resolved to absolute paths on load.
"""

from __future__ import annotations

import json
import os
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import UserInputError

CATEGORIES = ("style", "semantic", "structural")

_REQUIRED_KEYS = ("triplet_id", "source_video_id", "source_path", "edited_path",
                  "prompt", "method", "category")
_OPTIONAL_KEYS = ("source_prompt", "subcategory")


class ManifestError(UserInputError):
    """Manifest schema violation, reported with the offending record index."""

    def __init__(self, message: str, record: int | None = None):
        locus = f"record {record}: " if record is not None else ""
        super().__init__(f"{locus}{message}")
        self.record = record


@dataclass(frozen=True)
class EditTriplet:
    """One evaluation unit: source video, prompt(s), edited video, method label."""

    triplet_id: str
    source_video_id: str
    source_path: str
    edited_path: str
    prompt: str
    method: str
    category: str
    source_prompt: str | None = None
    subcategory: str | None = None

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ManifestError(
                f"triplet {self.triplet_id!r} has unknown category {self.category!r}; "
                f"expected one of {CATEGORIES}")


def _parse_record(raw: dict, index: int) -> EditTriplet:
    if not isinstance(raw, dict):
        raise ManifestError(f"expected an object, got {type(raw).__name__}", index)
    missing = [k for k in _REQUIRED_KEYS if k not in raw]
    if missing:
        raise ManifestError(f"missing field(s) {missing}", index)
    unknown = [k for k in raw if k not in _REQUIRED_KEYS + _OPTIONAL_KEYS]
    if unknown:
        raise ManifestError(f"unknown field(s) {unknown}", index)
    for key in _REQUIRED_KEYS:
        if not isinstance(raw[key], str) or not raw[key]:
            raise ManifestError(f"field {key!r} must be a non-empty string", index)
    if raw["category"] not in CATEGORIES:
        raise ManifestError(
            f"unknown category {raw['category']!r}; expected one of {CATEGORIES}", index)
    return EditTriplet(
        triplet_id=raw["triplet_id"],
        source_video_id=raw["source_video_id"],
        source_path=raw["source_path"],
        edited_path=raw["edited_path"],
        prompt=raw["prompt"],
        method=raw["method"],
        category=raw["category"],
        source_prompt=raw.get("source_prompt"),
        subcategory=raw.get("subcategory"),
    )


def load_manifest(path: str | Path) -> list[EditTriplet]:
    """Loads and validates a manifest; paths become absolute."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {path}")
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest {path} is not valid JSON: {exc}")
    if not isinstance(data, list):
        raise ManifestError(f"manifest {path} must be a JSON array of records")
    base = path.resolve().parent
    triplets: list[EditTriplet] = []
    seen: dict[str, int] = {}
    for i, raw in enumerate(data):
        t = _parse_record(raw, i)
        if t.triplet_id in seen:
            raise ManifestError(
                f"duplicate triplet_id {t.triplet_id!r} (first seen in record "
                f"{seen[t.triplet_id]})", i)
        seen[t.triplet_id] = i
        triplets.append(EditTriplet(
            triplet_id=t.triplet_id,
            source_video_id=t.source_video_id,
            source_path=str((base / t.source_path).resolve()),
            edited_path=str((base / t.edited_path).resolve()),
            prompt=t.prompt,
            method=t.method,
            category=t.category,
            source_prompt=t.source_prompt,
            subcategory=t.subcategory,
        ))
    return triplets


def write_manifest(triplets: list[EditTriplet], path: str | Path) -> None:
    """Writes a manifest; absolute paths are relativized against ``path``'s directory."""
    path = Path(path)
    base = path.resolve().parent

    def rel(p: str) -> str:
        if os.path.isabs(p):
            return os.path.relpath(p, base)
        return p

    records = []
    for t in triplets:
        rec = {
            "triplet_id": t.triplet_id,
            "source_video_id": t.source_video_id,
            "source_path": rel(t.source_path),
            "edited_path": rel(t.edited_path),
            "prompt": t.prompt,
            "method": t.method,
            "category": t.category,
        }
        if t.source_prompt is not None:
            rec["source_prompt"] = t.source_prompt
        if t.subcategory is not None:
            rec["subcategory"] = t.subcategory
        records.append(rec)
    path.write_text(json.dumps(records, indent=2) + "\n")


@dataclass(frozen=True)
class FoldSplit:
    """Partition of source videos into k folds; triplets inherit their source's fold."""

    k: int
    assignment: dict[str, int] = field(hash=False)

    def fold_of(self, triplet: EditTriplet) -> int:
        return self.assignment[triplet.source_video_id]

    def split(self, triplets: list[EditTriplet], fold: int
              ) -> tuple[list[EditTriplet], list[EditTriplet]]:
        """Returns (train, held_out) for one fold."""
        train = [t for t in triplets if self.fold_of(t) != fold]
        held = [t for t in triplets if self.fold_of(t) == fold]
        return train, held

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.assignment, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "FoldSplit":
        assignment = {str(k): int(v) for k, v in json.loads(Path(path).read_text()).items()}
        return cls(k=max(assignment.values()) + 1, assignment=assignment)


def make_folds(triplets: list[EditTriplet], k: int, seed: int) -> FoldSplit:
    """Deterministic k-fold partition by source video (no source leakage).

    Fold sizes, counted in source videos, differ by at most one.
    """
    if k < 2:
        raise UserInputError(f"fold count must be >= 2, got {k}")
    sources = sorted({t.source_video_id for t in triplets})
    if len(sources) < k:
        raise UserInputError(
            f"cannot split {len(sources)} source videos into {k} folds")
    rng = random.Random(seed)
    rng.shuffle(sources)
    assignment = {src: i % k for i, src in enumerate(sources)}
    return FoldSplit(k=k, assignment=assignment)


@dataclass(frozen=True)
class DatasetStats:
    """Counts and proportions over a manifest."""

    n_triplets: int
    n_sources: int
    by_category: dict[str, int]
    by_subcategory: dict[str, int]
    by_method: dict[str, int]

    def proportions(self, field_name: str = "by_category") -> dict[str, float]:
        counts: dict[str, int] = getattr(self, field_name)
        return {k: v / self.n_triplets for k, v in counts.items()}

    def as_dict(self) -> dict:
        return {
            "n_triplets": self.n_triplets,
            "n_sources": self.n_sources,
            "by_category": dict(sorted(self.by_category.items())),
            "by_subcategory": dict(sorted(self.by_subcategory.items())),
            "by_method": dict(sorted(self.by_method.items())),
            "category_proportions": {
                k: v / self.n_triplets for k, v in sorted(self.by_category.items())},
        }


def dataset_stats(triplets: list[EditTriplet]) -> DatasetStats:
    """Category / subcategory / method distribution of a manifest."""
    if not triplets:
        raise UserInputError("cannot report statistics of an empty manifest")
    return DatasetStats(
        n_triplets=len(triplets),
        n_sources=len({t.source_video_id for t in triplets}),
        by_category=dict(Counter(t.category for t in triplets)),
        by_subcategory=dict(Counter(t.subcategory or "unspecified" for t in triplets)),
        by_method=dict(Counter(t.method for t in triplets)),
    )
