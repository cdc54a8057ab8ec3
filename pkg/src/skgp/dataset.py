"""Regression datasets: CSV ingestion, standardization and fold plans."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    response: np.ndarray
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64, copy=True)
        y = np.array(self.response, dtype=np.float64, copy=True).reshape(-1)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{X.shape[0]} feature rows but {y.shape[0]} responses")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise DataError("features and response must be finite")
        if self.feature_names is not None and len(self.feature_names) != X.shape[1]:
            raise DataError("feature_names length does not match column count")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "response", y)
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def subset(self, rows) -> Dataset:
        rows = np.asarray(rows)
        return Dataset(self.features[rows], self.response[rows], self.feature_names)


@dataclass(frozen=True)
class StandardizationParams:
    feature_means: np.ndarray
    feature_sds: np.ndarray
    response_mean: float
    response_sd: float
    constant: np.ndarray = field(default=None)
    scale_features: bool = True

    def to_dict(self) -> dict:
        return {
            "feature_means": self.feature_means.tolist(),
            "feature_sds": self.feature_sds.tolist(),
            "response_mean": self.response_mean,
            "response_sd": self.response_sd,
            "constant": self.constant.tolist(),
            "scale_features": self.scale_features,
        }

    @classmethod
    def from_dict(cls, d: dict) -> StandardizationParams:
        return cls(
            feature_means=np.asarray(d["feature_means"], dtype=np.float64),
            feature_sds=np.asarray(d["feature_sds"], dtype=np.float64),
            response_mean=float(d["response_mean"]),
            response_sd=float(d["response_sd"]),
            constant=np.asarray(d["constant"], dtype=bool),
            scale_features=bool(d.get("scale_features", True)),
        )

    def transform_features(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.feature_means) / self.feature_sds

    def inverse_features(self, Z) -> np.ndarray:
        return np.asarray(Z, dtype=np.float64) * self.feature_sds + self.feature_means

    def transform_response(self, y) -> np.ndarray:
        return (np.asarray(y, dtype=np.float64) - self.response_mean) / self.response_sd

    def inverse_response(self, z) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) * self.response_sd + self.response_mean

    def apply(self, d: Dataset) -> Dataset:
        return Dataset(self.transform_features(d.features),
                       self.transform_response(d.response), d.feature_names)


@dataclass(frozen=True)
class FoldPlan:
    assignments: np.ndarray
    S: int

    def fold(self, s: int) -> np.ndarray:
        """Row indices in fold ``s`` (1-based)."""
        return np.flatnonzero(self.assignments == s)

    def complement(self, s: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != s)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.S + 1)[1:]


def _column_index(header, response_column):
    if isinstance(response_column, int) or (isinstance(response_column, str)
                                            and response_column.lstrip("-").isdigit()
                                            and response_column not in header):
        idx = int(response_column)
        if not -len(header) <= idx < len(header):
            raise DataError(f"response column index {idx} out of range")
        return idx % len(header)
    if response_column not in header:
        raise DataError(f"response column {response_column!r} not in header {header}")
    return header.index(response_column)


def _read_numeric_csv(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            vals = []
            for name, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: non-numeric value {cell!r} in column {name!r}") from None
                if not math.isfinite(v):
                    raise DataError(
                        f"{path}:{lineno}: non-finite value {cell!r} in column {name!r}")
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return header, np.array(rows, dtype=np.float64)


def load_csv(path, response_column="y") -> Dataset:
    header, arr = _read_numeric_csv(path)
    ycol = _column_index(header, response_column)
    fcols = [j for j in range(len(header)) if j != ycol]
    return Dataset(arr[:, fcols], arr[:, ycol], tuple(header[j] for j in fcols))


def load_features_csv(path, response_column="y", n_features: int | None = None) -> np.ndarray:
    """Feature matrix from a CSV; ``response_column`` is dropped when present."""
    header, arr = _read_numeric_csv(path)
    if response_column is not None and response_column in header:
        arr = np.delete(arr, header.index(response_column), axis=1)
    if n_features is not None and arr.shape[1] != n_features:
        raise DataError(f"{path}: expected {n_features} feature columns, found {arr.shape[1]}")
    return arr


def write_csv(d: Dataset, path, response_name: str = "y") -> None:
    names = d.feature_names or tuple(f"x{j + 1}" for j in range(d.p))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(names) + [response_name])
        for xi, yi in zip(d.features, d.response):
            w.writerow([f"{v:.17g}" for v in xi] + [f"{yi:.17g}"])


def standardize(d: Dataset, scale_features: bool = True) -> tuple[Dataset, StandardizationParams]:
    """Centre and scale columns and response to sample mean 0, sd 1.

    Constant columns are centred only; their sd is recorded as 1 and flagged.
    With ``scale_features=False`` features pass through unchanged and only the
    response is standardized.
    """
    if d.n < 2:
        raise DataError("standardize needs at least 2 rows")
    X, y = d.features, d.response
    if scale_features:
        means = X.mean(axis=0)
        sds = X.std(axis=0, ddof=1)
        # sd can underflow to 0 even when the range is nonzero
        constant = ~(np.ptp(X, axis=0) > 0) | ~(sds > 0)
        sds = np.where(constant, 1.0, sds)
    else:
        means = np.zeros(d.p)
        sds = np.ones(d.p)
        constant = ~(np.ptp(X, axis=0) > 0)
    y_mean = float(y.mean())
    y_sd = float(y.std(ddof=1))
    if not y_sd > 0:
        y_sd = 1.0
    params = StandardizationParams(means, sds, y_mean, y_sd, constant, scale_features)
    return params.apply(d), params


def destandardize(d: Dataset, params: StandardizationParams) -> Dataset:
    return Dataset(params.inverse_features(d.features),
                   params.inverse_response(d.response), d.feature_names)


def standardize_pooled(train: Dataset, test: Dataset):
    """Standardize both sets with statistics of their union."""
    pooled = Dataset(np.vstack([train.features, test.features]),
                     np.concatenate([train.response, test.response]))
    _, params = standardize(pooled)
    return params.apply(train), params.apply(test), params


def make_folds(n: int, S: int, seed: int = 0) -> FoldPlan:
    """Balanced random partition of ``range(n)`` into folds labelled 1..S."""
    if S < 2 or S > n:
        raise DataError(f"fold count S={S} must satisfy 2 <= S <= n={n}")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    order = rng.permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    assignments[order] = np.arange(n) % S + 1
    return FoldPlan(assignments, S)
