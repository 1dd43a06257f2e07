"""Independent brute-force oracles and shared fixtures for the test suite.

Everything here is deliberately written from the definitions (plain loops,
no scipy/numpy shortcuts shared with the implementation under test) so the
library is checked against a second, independent route.
"""

from __future__ import annotations

import math

from editqa.mos import RatingRecord


# -- correlation oracles -------------------------------------------------------

def oracle_ranks(values) -> list[float]:
    """Average ranks by pair counting: rank_i = 1 + #below + #ties/2."""
    ranks = []
    for i, x in enumerate(values):
        below = sum(1 for y in values if y < x)
        ties = sum(1 for j, y in enumerate(values) if y == x and j != i)
        ranks.append(1.0 + below + ties / 2.0)
    return ranks


def oracle_pearson(xs, ys) -> float:
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    return sxy / math.sqrt(sxx * syy)


def oracle_spearman(xs, ys) -> float:
    return oracle_pearson(oracle_ranks(xs), oracle_ranks(ys))


def oracle_kendall_tau_b(xs, ys) -> float:
    """Tau-b by O(n^2) pair counting with tie corrections."""
    concordant = discordant = ties_x = ties_y = 0
    n = len(xs)
    for i in range(n):
        for j in range(i + 1, n):
            dx = xs[i] - xs[j]
            dy = ys[i] - ys[j]
            if dx == 0 and dy == 0:
                ties_x += 1
                ties_y += 1
            elif dx == 0:
                ties_x += 1
            elif dy == 0:
                ties_y += 1
            elif dx * dy > 0:
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) / 2
    denom = math.sqrt((n0 - ties_x) * (n0 - ties_y))
    return (concordant - discordant) / denom


def oracle_rmse(xs, ys) -> float:
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(xs, ys)) / len(xs))


# -- BT.500 oracle --------------------------------------------------------------

def oracle_bt500_rejected(records: list[RatingRecord]) -> set[str]:
    """The stated screening procedure, written from scratch with plain loops."""
    triplet_scores: dict[str, list[float]] = {}
    annotator_scores: dict[str, dict[str, float]] = {}
    for r in records:
        triplet_scores.setdefault(r.triplet_id, []).append(r.raw_score)
        annotator_scores.setdefault(r.annotator_id, {})[r.triplet_id] = r.raw_score

    bands = {}
    for tid, xs in triplet_scores.items():
        n = len(xs)
        mu = sum(xs) / n
        var_sample = sum((x - mu) ** 2 for x in xs) / (n - 1)
        sigma = math.sqrt(var_sample)
        m2 = sum((x - mu) ** 2 for x in xs) / n
        m4 = sum((x - mu) ** 4 for x in xs) / n
        beta2 = m4 / (m2 * m2) if m2 > 0 else 0.0
        factor = 2.0 if 2.0 <= beta2 <= 4.0 else math.sqrt(20.0)
        bands[tid] = (mu - factor * sigma, mu + factor * sigma)

    rejected = set()
    for annotator, scores in annotator_scores.items():
        p = q = 0
        for tid, x in scores.items():
            lo, hi = bands[tid]
            if x > hi:
                p += 1
            if x < lo:
                q += 1
        total = len(scores)
        if p + q > 0 and (p + q) / total > 0.05 and abs(p - q) / (p + q) < 0.3:
            rejected.add(annotator)
    return rejected


def build_bt500_fixture(n_honest: int = 16) -> tuple[list[RatingRecord], str]:
    """16 honest raters plus one rater with inverted judgments.

    Honest scores are ground truth +/- a balanced {-1, 0, +1} pattern; the
    inverted rater scores 11 - truth. Ground truths are chosen so the
    inverted scores sit ~3 raw points off on two thirds of the items, split
    evenly above and below.
    """
    ground_truth = [4.0] * 8 + [7.0] * 8 + [5.5] * 8
    pattern = (-1.0, 0.0, 1.0)
    records = []
    for m, g in enumerate(ground_truth):
        tid = f"vid{m:03d}"
        for i in range(n_honest):
            records.append(RatingRecord(f"honest{i:02d}", tid,
                                        g + pattern[(i + m) % 3]))
        records.append(RatingRecord("inverted", tid, 11.0 - g))
    return records, "inverted"
