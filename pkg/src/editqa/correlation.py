"""Agreement metrics between predicted scores and MOS, plus the quartic fit.

SROCC uses average ranks for ties, KRCC is the tie-corrected tau-b, and the
degree-4 polynomial maps predictions onto the MOS scale before the fitted
PLCC/RMSE variants are computed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import UserInputError


def _as_vectors(pred, gt, min_len: int = 2) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=float)
    g = np.asarray(gt, dtype=float)
    if p.shape != g.shape or p.ndim != 1:
        raise UserInputError(f"expected equal-length 1-d vectors, got {p.shape} vs {g.shape}")
    if p.size < min_len:
        raise UserInputError(f"need at least {min_len} samples, got {p.size}")
    if not (np.isfinite(p).all() and np.isfinite(g).all()):
        raise UserInputError("inputs must be finite")
    return p, g


def plcc(pred, gt) -> float:
    """Pearson linear correlation coefficient."""
    p, g = _as_vectors(pred, gt)
    pc = p - p.mean()
    gc = g - g.mean()
    denom = np.sqrt((pc**2).sum() * (gc**2).sum())
    if denom == 0.0:
        raise UserInputError("PLCC undefined for constant input")
    return float((pc * gc).sum() / denom)


def srocc(pred, gt) -> float:
    """Spearman rank-order correlation (Pearson over average ranks)."""
    p, g = _as_vectors(pred, gt)
    if np.all(p == p[0]) or np.all(g == g[0]):
        raise UserInputError("SROCC undefined for constant input")
    return plcc(stats.rankdata(p), stats.rankdata(g))


def krcc(pred, gt) -> float:
    """Kendall rank-order correlation, tau-b (tie-corrected)."""
    p, g = _as_vectors(pred, gt)
    if np.all(p == p[0]) or np.all(g == g[0]):
        raise UserInputError("KRCC undefined for constant input")
    tau = stats.kendalltau(p, g, variant="b").statistic
    return float(tau)


def rmse(pred, gt) -> float:
    """Root-mean-square error."""
    p, g = _as_vectors(pred, gt, min_len=1)
    return float(np.sqrt(np.mean((p - g) ** 2)))


@dataclass(frozen=True)
class Poly4Fit:
    """Least-squares quartic mapping pred -> gt."""

    coefficients: tuple[float, float, float, float, float]  # ascending powers
    fitted: np.ndarray

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return sum(c * x**i for i, c in enumerate(self.coefficients))


def poly4_fit(pred, gt) -> Poly4Fit:
    """Fits gt ~ poly4(pred) by normal equations with unit-variance column scaling."""
    p, g = _as_vectors(pred, gt, min_len=5)
    design = np.stack([p**i for i in range(5)], axis=1)
    scale = design.std(axis=0)
    scale[0] = 1.0  # constant column
    if np.any(scale == 0.0):
        raise UserInputError("polynomial fit is singular: all predictions are equal")
    scaled = design / scale
    gram = scaled.T @ scaled
    if np.linalg.cond(gram) > 1e12:
        raise UserInputError("polynomial fit is numerically singular")
    coeffs = np.linalg.solve(gram, scaled.T @ g) / scale
    fitted = design @ coeffs
    return Poly4Fit(coefficients=tuple(float(c) for c in coeffs), fitted=fitted)


@dataclass(frozen=True)
class CorrelationReport:
    """The four agreement metrics, raw and after the quartic fit."""

    srocc: float
    plcc: float
    krcc: float
    rmse: float
    fitted_plcc: float | None
    fitted_rmse: float | None
    n: int
    fit_coefficients: tuple[float, ...] | None
    mos_source: str = "zscore"

    def as_dict(self) -> dict:
        return {
            "srocc": self.srocc,
            "plcc": self.plcc,
            "krcc": self.krcc,
            "rmse": self.rmse,
            "fitted_plcc": self.fitted_plcc,
            "fitted_rmse": self.fitted_rmse,
            "n": self.n,
            "fit_coefficients": list(self.fit_coefficients) if self.fit_coefficients else None,
            "mos_source": self.mos_source,
        }

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n")


def correlate_report(predictions: Mapping[str, float],
                     mos: Mapping[str, float],
                     mos_source: str = "zscore") -> CorrelationReport:
    """Builds a report from keyed predictions and MOS; key sets must match."""
    pred_keys = set(predictions)
    mos_keys = set(mos)
    if pred_keys != mos_keys:
        missing = sorted(mos_keys - pred_keys)
        extra = sorted(pred_keys - mos_keys)
        raise UserInputError(
            f"prediction/MOS key mismatch: missing predictions for {missing[:10]}"
            f"{'...' if len(missing) > 10 else ''}, extra predictions {extra[:10]}"
            f"{'...' if len(extra) > 10 else ''}")
    ids = sorted(pred_keys)
    p = np.array([predictions[i] for i in ids], dtype=float)
    g = np.array([mos[i] for i in ids], dtype=float)
    fitted_plcc = fitted_rmse = None
    coeffs = None
    if p.size >= 5:
        try:
            fit = poly4_fit(p, g)
            fitted_plcc = plcc(fit.fitted, g) if not np.allclose(g, g[0]) else None
            fitted_rmse = rmse(fit.fitted, g)
            coeffs = fit.coefficients
        except UserInputError:
            pass  # degenerate fit; raw metrics still reported
    return CorrelationReport(
        srocc=srocc(p, g), plcc=plcc(p, g), krcc=krcc(p, g), rmse=rmse(p, g),
        fitted_plcc=fitted_plcc, fitted_rmse=fitted_rmse,
        n=int(p.size), fit_coefficients=coeffs, mos_source=mos_source)


def write_scatter_csv(predictions: Mapping[str, float], mos: Mapping[str, float],
                      path: str | Path) -> None:
    """Dumps (pred, gt, fitted) rows for external plotting."""
    ids = sorted(predictions)
    p = np.array([predictions[i] for i in ids], dtype=float)
    g = np.array([mos[i] for i in ids], dtype=float)
    fitted = poly4_fit(p, g).fitted if p.size >= 5 else np.full_like(p, np.nan)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["triplet_id", "pred", "gt", "fitted"])
        for i, tid in enumerate(ids):
            writer.writerow([tid, repr(float(p[i])), repr(float(g[i])),
                             repr(float(fitted[i]))])


def load_predictions_csv(path: str | Path) -> dict[str, float]:
    """Reads the predictions CSV ``triplet_id,score``."""
    out: dict[str, float] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["triplet_id", "score"]:
            raise UserInputError(f"{path}: expected header 'triplet_id,score', got {header}")
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise UserInputError(f"{path} row {i}: expected 2 columns")
            tid, raw = row[0].strip(), row[1].strip()
            if tid in out:
                raise UserInputError(f"{path} row {i}: duplicate triplet_id {tid!r}")
            try:
                out[tid] = float(raw)
            except ValueError:
                raise UserInputError(f"{path} row {i}: score {raw!r} is not a number")
    return out


def write_predictions_csv(predictions: Mapping[str, float], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["triplet_id", "score"])
        for tid in sorted(predictions):
            writer.writerow([tid, repr(float(predictions[tid]))])
