"""Subjective-score pipeline: rater screening, per-rater standardization, aggregation.

Processing order follows the usual subjective-study practice: the
ITU-R BT.500 outlier screen runs on the RAW 1-10 scores, the survivors
are z-scored per annotator (sample standard deviation), and the per-item
mean of those z-scores is the MOS.
"""

from __future__ import annotations

import csv
import json
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import UserInputError

RATING_MIN = 1.0
RATING_MAX = 10.0

RATINGS_CSV_HEADER = ("annotator_id", "triplet_id", "raw_score", "timestamp")
MOS_CSV_HEADER = ("triplet_id", "mos", "rating_count", "dispersion")


class RatingError(UserInputError):
    """Malformed rating data, reported with a row locus where available."""


@dataclass(frozen=True)
class RatingRecord:
    """One raw 1-10 judgment of one triplet by one annotator."""

    annotator_id: str
    triplet_id: str
    raw_score: float
    timestamp: str | None = None

    def __post_init__(self):
        if not (RATING_MIN <= self.raw_score <= RATING_MAX):
            raise RatingError(
                f"raw_score {self.raw_score} for ({self.annotator_id}, "
                f"{self.triplet_id}) outside [{RATING_MIN:g}, {RATING_MAX:g}]")


@dataclass(frozen=True)
class MosEntry:
    mos: float
    rating_count: int
    dispersion: float


@dataclass(frozen=True)
class MosTable:
    """Per-triplet aggregated MOS plus the study-level rejection list."""

    entries: dict[str, MosEntry]
    rejected_annotators: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, triplet_id: str) -> bool:
        return triplet_id in self.entries

    def mos_of(self, triplet_id: str) -> float:
        return self.entries[triplet_id].mos

    def scores(self) -> dict[str, float]:
        return {tid: e.mos for tid, e in self.entries.items()}

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(MOS_CSV_HEADER)
            for tid in sorted(self.entries):
                e = self.entries[tid]
                writer.writerow([tid, repr(e.mos), e.rating_count, repr(e.dispersion)])

    @classmethod
    def read_csv(cls, path: str | Path) -> "MosTable":
        entries = {}
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or tuple(reader.fieldnames) != MOS_CSV_HEADER:
                raise RatingError(
                    f"{path}: expected header {','.join(MOS_CSV_HEADER)}")
            for i, row in enumerate(reader, start=2):
                try:
                    entries[row["triplet_id"]] = MosEntry(
                        mos=float(row["mos"]),
                        rating_count=int(row["rating_count"]),
                        dispersion=float(row["dispersion"]))
                except (TypeError, ValueError) as exc:
                    raise RatingError(f"{path} row {i}: {exc}")
        return cls(entries=entries)


def load_ratings_csv(path: str | Path) -> list[RatingRecord]:
    """Reads the ratings CSV; every validation error names its row."""
    records: list[RatingRecord] = []
    seen: dict[tuple[str, str], int] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != RATINGS_CSV_HEADER:
            raise RatingError(
                f"{path}: expected header {','.join(RATINGS_CSV_HEADER)}, got {header}")
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise RatingError(f"{path} row {i}: expected 4 columns, got {len(row)}")
            annotator, triplet, raw, ts = (c.strip() for c in row)
            try:
                score = float(raw)
            except ValueError:
                raise RatingError(f"{path} row {i}: raw_score {raw!r} is not a number")
            key = (annotator, triplet)
            if key in seen:
                raise RatingError(
                    f"{path} row {i}: duplicate rating for {key} (first at row {seen[key]})")
            seen[key] = i
            try:
                records.append(RatingRecord(annotator, triplet, score, ts or None))
            except RatingError as exc:
                raise RatingError(f"{path} row {i}: {exc}")
    return records


def write_ratings_csv(records: Iterable[RatingRecord], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RATINGS_CSV_HEADER)
        for r in records:
            writer.writerow([r.annotator_id, r.triplet_id, repr(r.raw_score),
                             r.timestamp or ""])


def _by_annotator(records: Sequence[RatingRecord]) -> dict[str, dict[str, float]]:
    out: dict[str, dict[str, float]] = defaultdict(dict)
    for r in records:
        if r.triplet_id in out[r.annotator_id]:
            raise RatingError(
                f"duplicate rating of {r.triplet_id!r} by {r.annotator_id!r}")
        out[r.annotator_id][r.triplet_id] = r.raw_score
    return dict(out)


def zscore_normalize(ratings: Sequence[RatingRecord] | Mapping[str, float]
                     ) -> dict[str, float]:
    """Standardizes one annotator's scores to mean 0, sample std 1.

    An annotator with zero variance contributes all-zero z-scores rather
    than failing the study.
    """
    if isinstance(ratings, Mapping):
        scores = dict(ratings)
    else:
        annotators = {r.annotator_id for r in ratings}
        if len(annotators) > 1:
            raise RatingError(
                f"zscore_normalize expects one annotator, got {sorted(annotators)}")
        scores = {r.triplet_id: r.raw_score for r in ratings}
    if len(scores) < 2:
        raise RatingError(
            f"annotator has {len(scores)} rating(s); need >= 2 to standardize")
    # Summation in sorted-key order keeps the result bit-identical no matter
    # how the rating records were ordered.
    values = np.array([scores[tid] for tid in sorted(scores)], dtype=float)
    mean = values.mean()
    std = values.std(ddof=1)
    if std == 0.0:
        return {tid: 0.0 for tid in scores}
    return {tid: (x - mean) / std for tid, x in scores.items()}


@dataclass(frozen=True)
class ScreeningResult:
    accepted: tuple[str, ...]
    rejected: tuple[str, ...]
    # per annotator: (P, Q, rating count)
    counts: dict[str, tuple[int, int, int]]


def bt500_screen(records: Sequence[RatingRecord]) -> ScreeningResult:
    """ITU-R BT.500 annex screening over raw scores.

    Per triplet the band is mean +/- 2*std when the kurtosis beta2 lies in
    [2, 4] (normal-ish) and mean +/- sqrt(20)*std otherwise. Per annotator,
    P counts ratings strictly above the band and Q strictly below; the
    annotator is rejected iff (P+Q)/N > 0.05 and |P-Q|/(P+Q) < 0.3.
    """
    by_ann = _by_annotator(records)
    if len(by_ann) < 2:
        raise RatingError(f"screening needs >= 2 annotators, got {len(by_ann)}")
    for ann, scores in by_ann.items():
        if len(scores) < 2:
            raise RatingError(f"annotator {ann!r} rated {len(scores)} triplet(s); need >= 2")

    by_triplet: dict[str, list[float]] = defaultdict(list)
    for r in records:
        by_triplet[r.triplet_id].append(r.raw_score)
    single = sorted(t for t, xs in by_triplet.items() if len(xs) < 2)
    if single:
        raise RatingError(f"triplet(s) rated only once: {single}")

    bands: dict[str, tuple[float, float]] = {}
    for tid, xs in by_triplet.items():
        arr = np.array(xs, dtype=float)
        mu = arr.mean()
        sigma = arr.std(ddof=1)
        m2 = float(np.mean((arr - mu) ** 2))
        beta2 = float(np.mean((arr - mu) ** 4) / m2**2) if m2 > 0 else 0.0
        factor = 2.0 if 2.0 <= beta2 <= 4.0 else math.sqrt(20.0)
        bands[tid] = (mu - factor * sigma, mu + factor * sigma)

    counts: dict[str, tuple[int, int, int]] = {}
    rejected: list[str] = []
    for ann, scores in by_ann.items():
        p = sum(1 for tid, x in scores.items() if x > bands[tid][1])
        q = sum(1 for tid, x in scores.items() if x < bands[tid][0])
        n = len(scores)
        counts[ann] = (p, q, n)
        if p + q > 0 and (p + q) / n > 0.05 and abs(p - q) / (p + q) < 0.3:
            rejected.append(ann)
    accepted = tuple(sorted(set(by_ann) - set(rejected)))
    return ScreeningResult(accepted=accepted, rejected=tuple(sorted(rejected)),
                           counts=counts)


def aggregate_mos(normalized: Mapping[str, Mapping[str, float]],
                  rejected: Sequence[str] = ()) -> MosTable:
    """Averages accepted annotators' z-scores per triplet.

    ``normalized`` maps annotator -> (triplet -> z-score). Dispersion is the
    population standard deviation of the contributing scores, so a single
    rating yields dispersion 0.
    """
    per_triplet: dict[str, list[float]] = defaultdict(list)
    for ann in sorted(normalized):
        for tid, z in normalized[ann].items():
            per_triplet[tid].append(z)
    entries = {}
    for tid, zs in per_triplet.items():
        arr = np.array(zs, dtype=float)
        entries[tid] = MosEntry(mos=float(arr.mean()),
                                rating_count=len(zs),
                                dispersion=float(arr.std(ddof=0)))
    return MosTable(entries=entries, rejected_annotators=tuple(sorted(rejected)))


def compute_mos(records: Sequence[RatingRecord]) -> MosTable:
    """Full pipeline: BT.500 screen on raw scores, z-score survivors, aggregate.

    Triplets left with zero accepted ratings are reported as an error, not
    silently dropped.
    """
    screening = bt500_screen(records)
    survivors = [r for r in records if r.annotator_id in set(screening.accepted)]
    all_triplets = {r.triplet_id for r in records}
    covered = {r.triplet_id for r in survivors}
    orphaned = sorted(all_triplets - covered)
    if orphaned:
        raise RatingError(
            f"triplet(s) lost all ratings after screening: {orphaned}")
    normalized = {
        ann: zscore_normalize(scores)
        for ann, scores in _by_annotator(survivors).items()
    }
    return aggregate_mos(normalized, rejected=screening.rejected)


def rescale_mos(table: MosTable, lo: float, hi: float) -> MosTable:
    """Affinely maps [min mos, max mos] onto [lo, hi]; order-preserving."""
    if lo >= hi:
        raise UserInputError(f"need lo < hi, got [{lo}, {hi}]")
    if not table.entries:
        raise UserInputError("cannot rescale an empty MOS table")
    values = [e.mos for e in table.entries.values()]
    vmin, vmax = min(values), max(values)
    if vmin == vmax:
        raise UserInputError("all MOS values are equal; rescale range is degenerate")
    slope = (hi - lo) / (vmax - vmin)
    entries = {
        tid: MosEntry(mos=lo + (e.mos - vmin) * slope,
                      rating_count=e.rating_count,
                      dispersion=e.dispersion * slope)
        for tid, e in table.entries.items()
    }
    return MosTable(entries=entries, rejected_annotators=table.rejected_annotators)


def write_rejected_json(rejected: Sequence[str], path: str | Path) -> None:
    Path(path).write_text(json.dumps(sorted(rejected)) + "\n")
