"""Log-score stacking of per-sketch predictive t distributions."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import stdtr

from . import gp
from .dataset import Dataset, FoldPlan
from .sketch import SketchMatrix, apply_sketch

LOG_FLOOR = -700.0


class StackingError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    sketch: SketchMatrix
    hyper: gp.GPHyper


@dataclass(frozen=True)
class SketchedGP:
    """A fitted GP together with the sketch that produced its inputs."""
    sketch: SketchMatrix
    fitted: gp.FittedGP

    def predict(self, X_new) -> gp.PredictiveT:
        return gp.predict(self.fitted, apply_sketch(self.sketch, X_new))


@dataclass(frozen=True)
class DensityTable:
    values: np.ndarray
    floored: np.ndarray = field(default=None)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, ndmin=2)
        if np.isnan(v).any():
            raise StackingError("density table contains NaN")
        if np.isposinf(v).any():
            raise StackingError("density table contains +inf")
        fl = v < LOG_FLOOR
        v = np.where(fl, LOG_FLOOR, v)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "floored", fl)

    @property
    def K(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    def model_scores(self) -> np.ndarray:
        """Mean held-out log density of each model."""
        return self.values.mean(axis=1)


@dataclass(frozen=True)
class StackWeights:
    w: np.ndarray
    objective: float = float("nan")
    trace: tuple = ()
    iterations: int = 0


@dataclass(frozen=True)
class StackedPredictive:
    weights: StackWeights
    components: tuple

    def __post_init__(self):
        sizes = {c.loc.shape[0] for c in self.components}
        if len(sizes) != 1:
            raise StackingError(f"components disagree on the number of test points: {sizes}")
        if len(self.components) != self.weights.w.shape[0]:
            raise StackingError("weight vector and component list differ in length")

    @property
    def n_new(self) -> int:
        return self.components[0].loc.shape[0]


def fold_log_densities(Z, y, hyper: gp.GPHyper, plan: FoldPlan) -> np.ndarray:
    """Held-out marginal log predictive density of each observation.

    For each fold the GP is refit (fixed hyperparameters) on the other folds,
    the fold is predicted jointly, and each coordinate's marginal t density is
    evaluated at its observed response.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if plan.assignments.shape[0] != y.shape[0]:
        raise StackingError("fold plan does not cover the data")
    out = np.empty(y.shape[0])
    for s in range(1, plan.S + 1):
        test, train = plan.fold(s), plan.complement(s)
        if train.size < 2:
            raise StackingError(f"fold {s} leaves only {train.size} conditioning observations")
        if test.size == 0:
            continue
        pt = gp.predict(gp.fit(Z[train], y[train], hyper), Z[test])
        out[test] = gp.t_logpdf(y[test], pt.df, pt.loc, pt.sd)
    return out


def fold_densities(models, d: Dataset, plan: FoldPlan, threads: int = 1) -> DensityTable:
    """K x n table of held-out log densities, one row per model spec."""
    def row(spec):
        return fold_log_densities(apply_sketch(spec.sketch, d.features), d.response,
                                  spec.hyper, plan)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, models))
    else:
        rows = [row(spec) for spec in models]
    return DensityTable(np.vstack(rows))


def _as_log_table(table) -> np.ndarray:
    if isinstance(table, DensityTable):
        return table.values
    L = np.array(table, dtype=np.float64, ndmin=2)
    if np.isnan(L).any():
        raise StackingError("density table contains NaN")
    if np.isneginf(L).all(axis=0).any():
        raise StackingError("an observation has zero density under every model")
    return L


def stacking_objective(w, log_table) -> float:
    L = _as_log_table(log_table)
    cmax = L.max(axis=0)
    P = np.exp(L - cmax)
    return float(np.mean(np.log(np.asarray(w) @ P) + cmax))


def optimize_weights(table, tol: float = 1e-10, max_iter: int = 10000) -> StackWeights:
    """Simplex weights maximising the mean log of the mixed held-out densities.

    The objective is concave in the weights; the multiplicative update
    ``w_k <- mean_i(w_k p_ki / sum_j w_j p_ji)`` increases it at every step.
    Iteration stops once the per-step gain falls below ``tol``. If a vertex of
    the simplex scores higher than the final iterate (possible when the optimum
    is a vertex and convergence toward it is slow), that vertex is returned.
    """
    L = _as_log_table(table)
    K = L.shape[0]
    if K == 0:
        raise StackingError("no models to stack")
    cmax = L.max(axis=0)
    P = np.exp(L - cmax)
    offset = float(cmax.mean())

    def obj(w):
        return float(np.mean(np.log(w @ P))) + offset

    w = np.full(K, 1.0 / K)
    current = obj(w)
    trace = [current]
    it = 0
    if K > 1:
        for it in range(1, max_iter + 1):
            mix = w @ P
            w_new = w * (P / mix).mean(axis=1)
            w_new /= w_new.sum()
            new = obj(w_new)
            gain = new - current
            if gain < 0:
                break
            w, current = w_new, new
            trace.append(current)
            if gain < tol:
                break
        vertex = np.array([float(np.mean(np.log(P[k]))) + offset for k in range(K)])
        k_best = int(np.argmax(vertex))
        if vertex[k_best] > current:
            w = np.zeros(K)
            w[k_best] = 1.0
            current = float(vertex[k_best])
            trace.append(current)
    return StackWeights(w, current, tuple(trace), it)


def stack_predict(models, w: StackWeights, X_new) -> StackedPredictive:
    if len(models) != w.w.shape[0]:
        raise StackingError(f"{len(models)} models but {w.w.shape[0]} weights")
    return StackedPredictive(w, tuple(m.predict(X_new) for m in models))


def mixture_mean(sp: StackedPredictive) -> np.ndarray:
    if any(c.df <= 1 for c in sp.components):
        raise StackingError("mixture mean undefined: a component has df <= 1")
    return sum(wk * c.loc for wk, c in zip(sp.weights.w, sp.components))


def _params(sp):
    w = np.asarray(sp.weights.w)
    mu = np.vstack([c.loc for c in sp.components])
    sd = np.vstack([c.sd for c in sp.components])
    df = np.array([c.df for c in sp.components])
    if not (sd > 0).all():
        raise StackingError("a component has a nonpositive marginal scale")
    return w, mu, sd, df


def mixture_cdf(sp: StackedPredictive, v) -> np.ndarray:
    """Mixture CDF of every coordinate evaluated at ``v`` (broadcast over coordinates)."""
    w, mu, sd, df = _params(sp)
    v = np.broadcast_to(np.asarray(v, dtype=np.float64), (sp.n_new,))
    return (w[:, None] * stdtr(df[:, None], (v[None, :] - mu) / sd)).sum(axis=0)


def mixture_quantiles(sp: StackedPredictive, q: float, tol: float = 1e-10,
                      max_iter: int = 400) -> np.ndarray:
    """Per-coordinate quantile of the mixture by bisection on its CDF."""
    if not 0.0 < q < 1.0:
        raise StackingError(f"quantile level {q} outside (0, 1)")
    w, mu, sd, df = _params(sp)
    lo = (mu - 50 * sd).min(axis=0)
    hi = (mu + 50 * sd).max(axis=0)

    def F(v):
        return (w[:, None] * stdtr(df[:, None], (v[None, :] - mu) / sd)).sum(axis=0)

    for _ in range(200):
        low_bad = F(lo) > q
        high_bad = F(hi) < q
        if not (low_bad.any() or high_bad.any()):
            break
        width = hi - lo
        lo = np.where(low_bad, lo - width, lo)
        hi = np.where(high_bad, hi + width, hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        below = F(mid) < q
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if (hi - lo).max() <= tol:
            break
    return 0.5 * (lo + hi)


def mixture_quantile(sp: StackedPredictive, coord: int, q: float) -> float:
    if not 0 <= coord < sp.n_new:
        raise IndexError(f"coordinate {coord} out of range for {sp.n_new}")
    return float(mixture_quantiles(sp, q)[coord])


def mixture_interval(sp: StackedPredictive, level: float = 0.95):
    a = 0.5 * (1.0 - level)
    return mixture_quantiles(sp, a), mixture_quantiles(sp, 1.0 - a)
