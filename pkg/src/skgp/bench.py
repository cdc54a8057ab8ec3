"""Seeded replicate runner and predictive metrics (MSPE, coverage, PI length)."""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import DataError, load_csv
from .model import SkGPConfig, fit
from .simgen import MANIFOLDS, SimConfig, generate
from .sketch import child_seed

SWEEPABLE = ("m", "screen_count", "tau2", "p", "K")


class ConfigError(ValueError):
    pass


def mspe(pred, truth) -> float:
    pred, truth = np.asarray(pred, dtype=np.float64), np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    return float(np.mean((pred - truth) ** 2))


def coverage(lower, upper, truth) -> float:
    lower, upper, truth = (np.asarray(a, dtype=np.float64) for a in (lower, upper, truth))
    if not (lower.shape == upper.shape == truth.shape):
        raise ValueError("lower, upper and truth must have equal lengths")
    if (lower > upper).any():
        raise ValueError("crossed interval bounds (lower > upper)")
    return float(np.mean((truth >= lower) & (truth <= upper)))


def median_length(lower, upper) -> float:
    return float(np.median(np.asarray(upper) - np.asarray(lower)))


@dataclass(frozen=True)
class ExperimentConfig:
    manifold: str = "swiss_roll"
    p: int = 2000
    tau2: float = 0.01
    n: int = 100
    n_new: int = 100
    screen_count: int = 1000
    m: int = 60
    K: int = 20
    S: int = 10
    replicates: int = 10
    seed: int = 0
    threads: int = 1
    sweep: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        if not isinstance(d, dict):
            raise ConfigError("experiment config must be a JSON object")
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in d.items():
            if key not in fields:
                raise ConfigError(f"unknown field {key!r}")
            kwargs[key] = _coerce(key, value, fields[key].type)
        exp = cls(**kwargs)
        exp.validate()
        return exp

    @classmethod
    def from_file(cls, path) -> ExperimentConfig:
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from None
        return cls.from_dict(raw)

    def validate(self) -> None:
        if self.manifold not in MANIFOLDS:
            raise ConfigError(f"field 'manifold': must be one of {MANIFOLDS}")
        for name in ("p", "n", "n_new", "screen_count", "m", "K", "S", "replicates", "threads"):
            if getattr(self, name) < 1:
                raise ConfigError(f"field {name!r}: must be >= 1")
        if self.tau2 < 0:
            raise ConfigError("field 'tau2': must be >= 0")
        for key, values in self.sweep.items():
            if key not in SWEEPABLE:
                raise ConfigError(f"field 'sweep': cannot sweep {key!r} (allowed: {SWEEPABLE})")
            if not isinstance(values, list) or not values:
                raise ConfigError(f"field 'sweep.{key}': must be a nonempty list")

    def settings(self):
        """One ``(label, ExperimentConfig)`` per sweep point (itself if no sweep)."""
        if not self.sweep:
            return [("", self)]
        out = []
        for key, values in self.sweep.items():
            for v in values:
                out.append((f"{key}={v}", dataclasses.replace(self, sweep={}, **{key: v})))
        return out


def _coerce(key, value, typ):
    typ = str(typ)
    try:
        if typ == "int":
            if isinstance(value, bool) or float(value) != int(value):
                raise TypeError
            return int(value)
        if typ == "float":
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if typ == "str":
            if not isinstance(value, str):
                raise TypeError
            return value
        if typ == "dict":
            if not isinstance(value, dict):
                raise TypeError
            return value
    except (TypeError, ValueError):
        raise ConfigError(f"field {key!r}: expected {typ}, got {value!r}") from None
    return value


@dataclass
class ReplicateResult:
    setting: str
    replicate: int
    seed: int
    mspe: float
    coverage: float
    median_length: float
    wall_time: float
    pipeline_time: float
    stack_weights: list

    def row(self) -> dict:
        return {
            "setting": self.setting, "replicate": self.replicate, "seed": self.seed,
            "mspe": repr(self.mspe), "coverage": repr(self.coverage),
            "median_length": repr(self.median_length),
            "stack_weights": " ".join(repr(float(w)) for w in self.stack_weights),
        }


def run_one(exp: ExperimentConfig, replicate: int, setting: str = "") -> ReplicateResult:
    """Simulate, fit and score one replicate.

    The data seed depends only on the root seed and replicate index, so every
    sweep setting sees the same datasets.
    """
    data_seed = child_seed(exp.seed, 0, replicate)
    model_seed = child_seed(exp.seed, 1, replicate)
    sim = generate(SimConfig(exp.manifold, exp.n, exp.n_new, exp.p, exp.tau2, data_seed))
    cfg = SkGPConfig(screen_count=min(exp.screen_count, exp.p), m=exp.m, K=exp.K,
                     S=exp.S, seed=model_seed)
    t0 = time.perf_counter()
    model = fit(sim.train, cfg)
    t1 = time.perf_counter()
    pred = model.predict(sim.test.features)
    t2 = time.perf_counter()
    y = sim.test.response
    pipeline = (t1 - t0) - model.timings["screening"] + (t2 - t1)
    return ReplicateResult(setting, replicate, data_seed, mspe(pred.point, y),
                           coverage(pred.lower, pred.upper, y),
                           median_length(pred.lower, pred.upper), t2 - t0, pipeline,
                           [float(w) for w in model.weights.w])


def run_replicates(exp: ExperimentConfig, threads: int | None = None) -> list[ReplicateResult]:
    """All replicates of all sweep settings, ordered by setting then replicate."""
    threads = threads or exp.threads
    tasks = [(label, cfg, r) for label, cfg in exp.settings() for r in range(exp.replicates)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda t: run_one(t[1], t[2], t[0]), tasks))
    return [run_one(cfg, r, label) for label, cfg, r in tasks]


def summarize(results: list[ReplicateResult]) -> list[dict]:
    """Mean, sd and sd/sqrt(R) of each metric per setting."""
    rows = []
    settings = list(dict.fromkeys(r.setting for r in results))
    for s in settings:
        rs = [r for r in results if r.setting == s]
        for metric in ("mspe", "coverage", "median_length"):
            v = np.array([getattr(r, metric) for r in rs])
            sd = float(v.std(ddof=1)) if v.size > 1 else float("nan")
            rows.append({"setting": s, "metric": metric, "replicates": v.size,
                         "mean": float(v.mean()), "sd": sd, "se": sd / math.sqrt(v.size)})
    return rows


def write_results(results, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"results": out / "results.csv", "summary": out / "summary.csv"}
    rows = [r.row() for r in results]
    with paths["results"].open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    with paths["summary"].open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["setting", "metric", "replicates", "mean", "sd", "se"],
                           lineterminator="\n")
        w.writeheader()
        for row in summarize(results):
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return {k: str(v) for k, v in paths.items()}


def read_predictions(path) -> dict:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        need = {"index", "point", "lower95", "upper95"}
        if reader.fieldnames is None or not need <= set(reader.fieldnames):
            raise DataError(f"{path}: prediction CSV needs columns {sorted(need)}")
        rows = list(reader)
    return {k: np.array([float(r[k]) for r in rows]) for k in ("point", "lower95", "upper95")}


def score_predictions(pred_path, truth_path, response_column="y") -> dict:
    """Metrics for an externally produced prediction CSV against a test CSV."""
    pred = read_predictions(pred_path)
    truth = load_csv(truth_path, response_column).response
    return {"mspe": mspe(pred["point"], truth),
            "coverage": coverage(pred["lower95"], pred["upper95"], truth),
            "median_length": median_length(pred["lower95"], pred["upper95"])}
