"""End-to-end sketched GP estimator: screen, sketch, fit, stack, predict."""
from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__, gp
from ._backend import BACKEND
from .dataset import Dataset, StandardizationParams, make_folds, standardize
from .screening import ScreeningResult, screen
from .sketch import GENERATOR_VERSION, apply_sketch, child_seed, generate_sketch
from .stacking import (DensityTable, ModelSpec, SketchedGP, StackedPredictive, StackWeights,
                       fold_densities, mixture_interval, mixture_mean, optimize_weights,
                       stack_predict)

BUNDLE_FORMAT = 1
SKETCH_STREAM = 0
FOLD_STREAM = 1


class BundleError(ValueError):
    pass


@dataclass(frozen=True)
class SkGPConfig:
    screen_count: int = 1000
    m: int = 60
    K: int = 20
    S: int = 10
    seed: int = 0
    spline_degree: int = 3
    knot_count: int = 4
    standardize_features: bool = False
    standardize_response: bool = True
    search: gp.HyperSearchConfig = field(default_factory=gp.HyperSearchConfig)
    level: float = 0.95
    threads: int = 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("threads")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> SkGPConfig:
        d = dict(d)
        search = d.pop("search", None)
        if isinstance(search, dict):
            search = gp.HyperSearchConfig(**{k: tuple(v) if isinstance(v, list) else v
                                             for k, v in search.items()})
        return cls(search=search or gp.HyperSearchConfig(), **d)


@dataclass
class Prediction:
    point: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    stacked: StackedPredictive


@dataclass
class SkGPModel:
    config: SkGPConfig
    params: StandardizationParams
    screening: ScreeningResult
    models: list
    weights: StackWeights
    table: DensityTable
    p: int
    timings: dict = field(default_factory=dict)
    response_transform: str = "identity"

    @property
    def sketch_seeds(self) -> list[int]:
        return [m.sketch.seed for m in self.models]

    def predict(self, X_new, level: float | None = None) -> Prediction:
        X_new = np.atleast_2d(np.asarray(X_new, dtype=np.float64))
        if X_new.shape[1] != self.p:
            raise BundleError(f"feature matrix has {X_new.shape[1]} columns, "
                              f"model was fit on {self.p}")
        Xs = self.params.transform_features(X_new)
        sp = stack_predict(self.models, self.weights, Xs)
        lower, upper = mixture_interval(sp, level or self.config.level)
        point = mixture_mean(sp)
        inv = self.params.inverse_response
        if self.response_transform == "log":
            return Prediction(np.exp(inv(point)), np.exp(inv(lower)), np.exp(inv(upper)), sp)
        return Prediction(inv(point), inv(lower), inv(upper), sp)

    def report(self) -> dict:
        """Stacking summary: weights, hyperparameters, held-out scores, seeds."""
        return {
            "weights": [float(w) for w in self.weights.w],
            "stacked_log_score": float(self.weights.objective),
            "model_log_scores": [float(s) for s in self.table.model_scores()],
            "hyper": [{"theta": m.fitted.hyper.theta, "psi2": m.fitted.hyper.psi2}
                      for m in self.models],
            "root_seed": self.config.seed,
            "sketch_seeds": [int(s) for s in self.sketch_seeds],
            "fold_seed": child_seed(self.config.seed, FOLD_STREAM),
            "generator": GENERATOR_VERSION,
            "response_transform": self.response_transform,
        }

    def manifest(self) -> dict:
        return {
            "software": f"skgp {__version__}",
            "backend": BACKEND,
            "generator": GENERATOR_VERSION,
            "config": self.config.to_dict(),
            "root_seed": self.config.seed,
            "sketch_seeds": [int(s) for s in self.sketch_seeds],
            "fold_seed": child_seed(self.config.seed, FOLD_STREAM),
            "timings": dict(self.timings),
            "response_transform": self.response_transform,
        }

    def save(self, path) -> None:
        arrays = {"screened": self.screening.selected,
                  "table": self.table.values,
                  "weights": self.weights.w}
        per_model = []
        for k, m in enumerate(self.models):
            arrays.update(m.fitted.to_arrays(prefix=f"m{k}_"))
            per_model.append({"sketch_seed": int(m.sketch.seed), "m": m.sketch.m,
                              **m.fitted.meta()})
        meta = {
            "bundle_format": BUNDLE_FORMAT,
            "p": self.p,
            "standardization": self.params.to_dict(),
            "screening": self.screening.to_dict(include_scores=False),
            "models": per_model,
            "stack_objective": self.weights.objective,
            "response_transform": self.response_transform,
            "manifest": self.manifest(),
        }
        arrays["meta"] = np.array(json.dumps(meta))
        with Path(path).open("wb") as fh:
            np.savez(fh, **arrays)

    @classmethod
    def load(cls, path) -> SkGPModel:
        with np.load(path, allow_pickle=False) as z:
            arrays = {k: z[k] for k in z.files}
        meta = json.loads(str(arrays["meta"]))
        if meta.get("bundle_format") != BUNDLE_FORMAT:
            raise BundleError(f"unsupported bundle format {meta.get('bundle_format')}")
        man = meta["manifest"]
        if man["generator"] != GENERATOR_VERSION:
            raise BundleError(f"bundle sketches were drawn with {man['generator']}, "
                              f"this build uses {GENERATOR_VERSION}")
        config = SkGPConfig.from_dict(man["config"])
        screening = ScreeningResult.from_dict(meta["screening"])
        models = []
        for k, mm in enumerate(meta["models"]):
            sk = generate_sketch(mm["sketch_seed"], mm["m"], screening)
            models.append(SketchedGP(sk, gp.FittedGP.from_arrays(mm, arrays, prefix=f"m{k}_")))
        weights = StackWeights(arrays["weights"], float(meta["stack_objective"]))
        return cls(config, StandardizationParams.from_dict(meta["standardization"]),
                   screening, models, weights, DensityTable(arrays["table"]), int(meta["p"]),
                   dict(man.get("timings", {})), meta.get("response_transform", "identity"))


def _fit_one(seed, screening, cfg, X, y):
    sk = generate_sketch(seed, cfg.m, screening)
    Z = apply_sketch(sk, X)
    hyper = gp.optimize_hyper(Z, y, cfg.search)
    return SketchedGP(sk, gp.fit(Z, y, hyper))


def fit_sketches(train: Dataset, screening: ScreeningResult, cfg: SkGPConfig) -> list:
    seeds = [child_seed(cfg.seed, SKETCH_STREAM, k) for k in range(cfg.K)]
    X, y = train.features, train.response
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            return list(pool.map(lambda s: _fit_one(s, screening, cfg, X, y), seeds))
    return [_fit_one(s, screening, cfg, X, y) for s in seeds]


def fit(train: Dataset, cfg: SkGPConfig | None = None,
        screening: ScreeningResult | None = None) -> SkGPModel:
    """Fit the stacked ensemble of sketched GPs on ``train``.

    ``screening`` may be supplied to reuse a stored screened set.
    """
    cfg = cfg or SkGPConfig()
    timings = {}
    t0 = time.perf_counter()
    data, params = standardize(train, scale_features=cfg.standardize_features)
    if not cfg.standardize_response:
        params = replace(params, response_mean=0.0, response_sd=1.0)
        data = params.apply(train)
    timings["standardize"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    if screening is None:
        screening = screen(data, min(cfg.screen_count, data.p), cfg.spline_degree,
                           cfg.knot_count, threads=cfg.threads)
    elif screening.selected.max() >= data.p:
        raise BundleError("screened indices exceed the feature count")
    timings["screening"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    models = fit_sketches(data, screening, cfg)
    timings["sketch_and_hyper"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    plan = make_folds(data.n, min(cfg.S, data.n), child_seed(cfg.seed, FOLD_STREAM))
    specs = [ModelSpec(m.sketch, m.fitted.hyper) for m in models]
    table = fold_densities(specs, data, plan, threads=cfg.threads)
    weights = optimize_weights(table)
    timings["stacking"] = time.perf_counter() - t0
    return SkGPModel(cfg, params, screening, models, weights, table, data.p, timings)
