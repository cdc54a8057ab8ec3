"""Marginal nonparametric screening of features against the response.

Each feature is scored by the explained sum of squares of a cubic B-spline
regression of the response on that feature alone (knots at empirical
quantiles). The highest-scoring columns form the screened set that the
sketching matrix mixes.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _backend
from ._core_py import full_knot_vector
from .dataset import Dataset

RIDGE = 1e-8


class ScreeningError(ValueError):
    pass


@dataclass(frozen=True)
class ScreeningResult:
    scores: np.ndarray | None
    selected: np.ndarray
    spline_degree: int = 3
    knot_count: int = 4

    def to_dict(self, include_scores: bool = True) -> dict:
        d = {
            "selected": [int(i) for i in self.selected],
            "spline_degree": self.spline_degree,
            "knot_count": self.knot_count,
        }
        if include_scores and self.scores is not None:
            d["scores"] = [float(s) for s in self.scores]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ScreeningResult:
        scores = d.get("scores")
        return cls(
            scores=None if scores is None else np.asarray(scores, dtype=np.float64),
            selected=np.asarray(d["selected"], dtype=np.int64),
            spline_degree=int(d.get("spline_degree", 3)),
            knot_count=int(d.get("knot_count", 4)),
        )

    def save(self, path, include_scores: bool = True) -> None:
        Path(path).write_text(json.dumps(self.to_dict(include_scores), indent=1))

    @classmethod
    def load(cls, path) -> ScreeningResult:
        return cls.from_dict(json.loads(Path(path).read_text()))


def quantile_knots(x, knot_count: int) -> np.ndarray:
    levels = np.arange(1, knot_count + 1) / (knot_count + 1)
    return np.quantile(np.asarray(x, dtype=np.float64), levels, axis=0)


def bspline_design(x, degree: int = 3, knot_count: int = 4) -> np.ndarray:
    """B-spline basis of ``x`` with interior knots at its empirical quantiles.

    Returns an ``n x (knot_count + degree + 1)`` matrix whose rows sum to one.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    lo, hi = x.min(), x.max()
    if not hi > lo:
        raise ScreeningError("cannot build a spline basis on a constant vector")
    dim = knot_count + degree + 1
    if x.size <= dim:
        raise ScreeningError(f"need more than {dim} points for a basis of dimension {dim}")
    t = full_knot_vector(lo, hi, quantile_knots(x, knot_count), degree)
    return _backend.bspline_basis(x, t, degree)


def marginal_score(y, x, degree: int = 3, knot_count: int = 4) -> float:
    """Null RSS minus spline-fit RSS for regressing ``y`` on one feature."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if y.size != x.size:
        raise ScreeningError(f"length mismatch: y has {y.size}, x has {x.size}")
    return float(_scores(x[:, None], y, degree, knot_count)[0])


def _scores(X, y, degree, knot_count):
    n, p = X.shape
    if n <= knot_count + degree + 1:
        raise ScreeningError(f"n={n} too small for spline basis of dimension "
                             f"{knot_count + degree + 1}")
    yc = y - y.mean()
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    interior = np.ascontiguousarray(quantile_knots(X, knot_count).T.reshape(p, knot_count))
    return _backend.screening_scores(X, yc, interior, lo, hi, degree, RIDGE)


def score_features(X, y, degree: int = 3, knot_count: int = 4, threads: int = 1,
                   chunk: int = 512) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.shape[0] != y.size:
        raise ScreeningError("feature rows and response length differ")
    p = X.shape[1]
    if threads <= 1 or p <= chunk:
        return _scores(X, y, degree, knot_count)
    bounds = [(a, min(a + chunk, p)) for a in range(0, p, chunk)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = pool.map(lambda ab: _scores(X[:, ab[0]:ab[1]], y, degree, knot_count), bounds)
        return np.concatenate(list(parts))


def rank_scores(scores, constant=None) -> np.ndarray:
    """Column indices by descending score, ties to the lower index."""
    scores = np.asarray(scores, dtype=np.float64)
    order = np.lexsort((np.arange(scores.size), -scores))
    if constant is not None:
        order = order[~np.asarray(constant, dtype=bool)[order]]
    return order


def screen(d: Dataset, target_count: int = 1000, degree: int = 3, knot_count: int = 4,
           threads: int = 1) -> ScreeningResult:
    if not 1 <= target_count <= d.p:
        raise ScreeningError(f"target_count={target_count} outside [1, {d.p}]")
    scores = score_features(d.features, d.response, degree, knot_count, threads)
    constant = ~(np.ptp(d.features, axis=0) > 0)
    order = rank_scores(scores, constant)
    return ScreeningResult(scores, order[:target_count].astype(np.int64), degree, knot_count)
