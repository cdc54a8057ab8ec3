"""Conjugate Gaussian process regression on sketched features.

Model, for fixed length-scale ``theta`` and signal-to-noise ratio ``psi2``::

    y | f, xi2  ~ N(f, xi2 I)
    f | xi2     ~ N(0, xi2 psi2 C),   C_ij = exp(-theta ||z_i - z_j||)
    p(xi2)      ∝ 1 / xi2

Integrating out ``f`` and ``xi2`` leaves scaled multivariate t laws for the
fitted function and for new responses, with ``n`` degrees of freedom and the
common scale factor ``2b/n`` where ``b = y' (psi2 C + I)^-1 y / 2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cholesky, cho_solve, solve_triangular
from scipy.optimize import minimize
from scipy.special import gammaln

from . import _backend

JITTERS = (0.0, 1e-10, 1e-8, 1e-6)
FORMAT_VERSION = 1


class GPError(ArithmeticError):
    pass


@dataclass(frozen=True)
class GPHyper:
    theta: float
    psi2: float

    def __post_init__(self):
        if not self.theta > 0:
            raise GPError(f"length-scale theta must be > 0, got {self.theta}")
        if not self.psi2 >= 0:
            raise GPError(f"signal-to-noise ratio psi2 must be >= 0, got {self.psi2}")
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "psi2", float(self.psi2))


@dataclass(frozen=True)
class HyperSearchConfig:
    n_theta: int = 32
    theta_span: tuple[float, float] = (0.01, 100.0)  # multiples of 1 / median distance
    n_psi2: int = 32
    psi2_range: tuple[float, float] = (1e-3, 1e3)
    refine: bool = True
    maxiter: int = 200
    xatol: float = 1e-6
    fatol: float = 1e-10


@dataclass(frozen=True)
class PredictiveT:
    df: float
    loc: np.ndarray
    scale: np.ndarray

    @property
    def sd(self) -> np.ndarray:
        """Marginal scale parameter of each coordinate."""
        return np.sqrt(np.diag(self.scale))


@dataclass(frozen=True)
class PosteriorSummary:
    xi2_ig: tuple[float, float]
    f_t: PredictiveT


@dataclass(frozen=True)
class FittedGP:
    Z: np.ndarray
    y: np.ndarray
    hyper: GPHyper
    chol_factor: np.ndarray
    b: float
    jitter: float = 0.0
    alpha: np.ndarray = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    def to_arrays(self, prefix: str = "") -> dict:
        return {
            f"{prefix}Z": self.Z,
            f"{prefix}y": self.y,
            f"{prefix}chol": self.chol_factor,
            f"{prefix}alpha": self.alpha,
        }

    def meta(self) -> dict:
        return {"format_version": FORMAT_VERSION, "theta": self.hyper.theta,
                "psi2": self.hyper.psi2, "b": self.b, "jitter": self.jitter, "n": self.n}

    @classmethod
    def from_arrays(cls, meta: dict, arrays, prefix: str = "") -> FittedGP:
        if meta.get("format_version") != FORMAT_VERSION:
            raise GPError(f"unsupported FittedGP format {meta.get('format_version')}")
        return cls(
            Z=np.asarray(arrays[f"{prefix}Z"]),
            y=np.asarray(arrays[f"{prefix}y"]),
            hyper=GPHyper(meta["theta"], meta["psi2"]),
            chol_factor=np.asarray(arrays[f"{prefix}chol"]),
            b=float(meta["b"]),
            jitter=float(meta["jitter"]),
            alpha=np.asarray(arrays[f"{prefix}alpha"]),
        )


def kernel(z1, z2, theta: float) -> float:
    """Exponential correlation ``exp(-theta * ||z1 - z2||)``."""
    if not theta > 0:
        raise GPError(f"theta must be > 0, got {theta}")
    d = np.asarray(z1, dtype=np.float64) - np.asarray(z2, dtype=np.float64)
    return float(np.exp(-theta * np.sqrt(d @ d)))


def distances(Z, Z2=None) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    Z2 = Z if Z2 is None else np.atleast_2d(np.asarray(Z2, dtype=np.float64))
    return _backend.pairwise_distances(Z, Z2)


def gram(Z, theta: float, Z2=None) -> np.ndarray:
    if not theta > 0:
        raise GPError(f"theta must be > 0, got {theta}")
    return np.exp(-theta * distances(Z, Z2))


def _cholesky_ladder(A):
    for eps in JITTERS:
        try:
            M = A if eps == 0.0 else A + eps * np.eye(A.shape[0])
            return cholesky(M, lower=True, check_finite=False), eps
        except LinAlgError:
            continue
    raise GPError("Cholesky of psi2*C + I failed at every jitter level "
                  f"{JITTERS}; psi2 is numerically too large for these inputs")


def _system(hyper, D):
    return hyper.psi2 * np.exp(-hyper.theta * D) + np.eye(D.shape[0])


def _log_marginal_from(L, y):
    n = y.shape[0]
    w = solve_triangular(L, y, lower=True, check_finite=False)
    quad = float(w @ w)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    const = 0.5 * n * np.log(2.0) + gammaln(0.5 * n) - 0.5 * n * np.log(2.0 * np.pi)
    return -0.5 * logdet - 0.5 * n * np.log(quad) + const


def log_marginal(hyper: GPHyper, Z, y, D=None) -> float:
    """Log of the (theta, psi2) objective with its normalising constants.

    ``-0.5 log|psi2 C + I| - (n/2) log(y' (psi2 C + I)^-1 y)
    + log(2^(n/2) Gamma(n/2)) - n log(sqrt(2 pi))``
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if D is None:
        D = distances(Z)
    if D.shape[0] != y.shape[0]:
        raise GPError(f"{D.shape[0]} inputs but {y.shape[0]} responses")
    L, _ = _cholesky_ladder(_system(hyper, D))
    return _log_marginal_from(L, y)


def median_distance(Z=None, D=None) -> float:
    if D is None:
        D = distances(Z)
    iu = np.triu_indices(D.shape[0], k=1)
    med = float(np.median(D[iu])) if iu[0].size else 0.0
    return med if med > 0 else 1.0


def grid_log_marginal(D, y, thetas, psi2s) -> np.ndarray:
    """Objective over a (theta, psi2) grid, one eigendecomposition per theta."""
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    const = 0.5 * n * np.log(2.0) + gammaln(0.5 * n) - 0.5 * n * np.log(2.0 * np.pi)
    psi2s = np.asarray(psi2s, dtype=np.float64)
    out = np.empty((len(thetas), psi2s.size))
    for i, th in enumerate(thetas):
        lam, U = np.linalg.eigh(np.exp(-th * D))
        lam = np.clip(lam, 0.0, None)
        proj2 = (U.T @ y) ** 2
        denom = psi2s[:, None] * lam[None, :] + 1.0
        logdet = np.log(denom).sum(axis=1)
        quad = (proj2[None, :] / denom).sum(axis=1)
        out[i] = -0.5 * logdet - 0.5 * n * np.log(quad) + const
    return out


def optimize_hyper(Z, y, search: HyperSearchConfig | None = None) -> GPHyper:
    """Maximise the marginal objective: log-spaced grid, then Nelder-Mead.

    The length-scale grid is anchored to the median pairwise distance of the
    rows of ``Z``; the refinement runs in (log(theta * median), log psi2) and is
    kept inside the grid box.
    """
    search = search or HyperSearchConfig()
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size < 2:
        raise GPError("hyperparameter search needs n >= 2")
    D = distances(Z)
    dbar = median_distance(D=D)
    lt = np.linspace(np.log(search.theta_span[0]), np.log(search.theta_span[1]), search.n_theta)
    lp = np.linspace(np.log(search.psi2_range[0]), np.log(search.psi2_range[1]), search.n_psi2)
    grid = grid_log_marginal(D, y, np.exp(lt) / dbar, np.exp(lp))
    i, j = np.unravel_index(np.argmax(grid), grid.shape)
    best = np.array([lt[i], lp[j]])
    if search.refine:
        def neg(u):
            try:
                return -log_marginal(GPHyper(np.exp(u[0]) / dbar, np.exp(u[1])), None, y, D=D)
            except GPError:
                return np.inf

        res = minimize(neg, best, method="Nelder-Mead",
                       bounds=[(lt[0], lt[-1]), (lp[0], lp[-1])],
                       options={"maxiter": search.maxiter, "xatol": search.xatol,
                                "fatol": search.fatol})
        if np.isfinite(res.fun) and -res.fun >= grid[i, j]:
            best = res.x
    return GPHyper(np.exp(best[0]) / dbar, np.exp(best[1]))


def fit(Z, y, hyper: GPHyper) -> FittedGP:
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if Z.shape[0] != y.shape[0]:
        raise GPError(f"{Z.shape[0]} inputs but {y.shape[0]} responses")
    L, eps = _cholesky_ladder(_system(hyper, distances(Z)))
    alpha = cho_solve((L, True), y, check_finite=False)
    b = 0.5 * float(y @ alpha)
    for a in (Z, y, L, alpha):
        a.flags.writeable = False
    return FittedGP(Z, y, hyper, L, b, eps, alpha)


def posterior(f: FittedGP) -> PosteriorSummary:
    """Inverse-gamma law of the noise variance and t law of the latent function.

    Uses ``psi2 C (psi2 C + I)^-1``, which equals ``(I + C^-1 / psi2)^-1`` for
    ``psi2 > 0`` and stays defined at ``psi2 = 0``.
    """
    n = f.n
    K = f.hyper.psi2 * gram(f.Z, f.hyper.theta)
    V = solve_triangular(f.chol_factor, K, lower=True, check_finite=False)
    M = K - V.T @ V
    M = 0.5 * (M + M.T)
    loc = K @ f.alpha
    return PosteriorSummary((0.5 * n, f.b), PredictiveT(float(n), loc, (2.0 * f.b / n) * M))


def predict(f: FittedGP, Z_new) -> PredictiveT:
    Z_new = np.atleast_2d(np.asarray(Z_new, dtype=np.float64))
    if Z_new.shape[1] != f.Z.shape[1]:
        raise GPError(f"new inputs have {Z_new.shape[1]} columns, model expects {f.Z.shape[1]}")
    psi2, theta = f.hyper.psi2, f.hyper.theta
    K_no = psi2 * gram(Z_new, theta, f.Z)
    loc = K_no @ f.alpha
    V = solve_triangular(f.chol_factor, K_no.T, lower=True, check_finite=False)
    S = np.eye(Z_new.shape[0]) + psi2 * gram(Z_new, theta) - V.T @ V
    S = 0.5 * (S + S.T)
    return PredictiveT(float(f.n), loc, (2.0 * f.b / f.n) * S)


def t_logpdf(value, df, loc, sd):
    """Log density of the univariate scaled t (vectorised)."""
    value, loc, sd = (np.asarray(a, dtype=np.float64) for a in (value, loc, sd))
    z2 = ((value - loc) / sd) ** 2
    return (gammaln(0.5 * (df + 1)) - gammaln(0.5 * df)
            - 0.5 * np.log(df * np.pi * sd ** 2) - 0.5 * (df + 1) * np.log1p(z2 / df))


def t_logpdf_marginal(pt: PredictiveT, coord: int, value: float) -> float:
    if not 0 <= coord < pt.loc.shape[0]:
        raise IndexError(f"coordinate {coord} out of range for {pt.loc.shape[0]}")
    s2 = pt.scale[coord, coord]
    if not s2 > 0:
        raise GPError(f"nonpositive marginal scale {s2} at coordinate {coord}")
    return float(t_logpdf(value, pt.df, pt.loc[coord], np.sqrt(s2)))
