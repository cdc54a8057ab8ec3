"""Pure numpy implementations of the numerical kernels.

These mirror ``_core.pyx`` one to one and are used whenever the compiled
extension is unavailable (or ``SKGP_PURE_PYTHON=1`` is set).
"""
import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial.distance import cdist


def full_knot_vector(lo, hi, interior, degree):
    """Clamped knot vector: boundary knots repeated ``degree + 1`` times."""
    interior = np.asarray(interior, dtype=np.float64)
    return np.concatenate([np.full(degree + 1, lo), interior, np.full(degree + 1, hi)])


def find_spans(t, x, degree):
    nbasis = t.size - degree - 1
    nonempty = np.flatnonzero(t[degree:nbasis] < t[degree + 1:nbasis + 1]) + degree
    last = nonempty[-1]
    span = np.searchsorted(t, x, side="right") - 1
    return np.clip(span, degree, last)


def bspline_basis(x, t, degree):
    """Dense B-spline design on the clamped knot vector ``t``.

    Nonzero values are generated with the triangular Cox-de Boor scheme
    (one span per point, ``degree + 1`` active functions).
    """
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    n = x.size
    nbasis = t.size - degree - 1
    span = find_spans(t, x, degree)
    local = _local_basis(t, x, span, degree)
    out = np.zeros((n, nbasis))
    rows = np.arange(n)
    for r in range(degree + 1):
        out[rows, span - degree + r] = local[:, r]
    return out


def _local_basis(t, x, span, degree):
    n = x.size
    N = np.zeros((n, degree + 1))
    N[:, 0] = 1.0
    left = np.zeros((n, degree + 1))
    right = np.zeros((n, degree + 1))
    for j in range(1, degree + 1):
        left[:, j] = x - t[span + 1 - j]
        right[:, j] = t[span + j] - x
        saved = np.zeros(n)
        for r in range(j):
            temp = N[:, r] / (right[:, r + 1] + left[:, j - r])
            N[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        N[:, j] = saved
    return N


def screening_scores(X, yc, interior, lo, hi, degree, ridge):
    """Explained sum of squares of a ridge-stabilised spline fit per column.

    ``yc`` must be centred. Columns with ``lo == hi`` score exactly zero.
    """
    X = np.asarray(X, dtype=np.float64)
    n, p = X.shape
    null_ss = float(yc @ yc)
    scores = np.zeros(p)
    for j in range(p):
        if not hi[j] > lo[j]:
            continue
        t = full_knot_vector(lo[j], hi[j], interior[j], degree)
        B = bspline_basis(X[:, j], t, degree)
        G = B.T @ B
        G[np.diag_indices_from(G)] += ridge
        beta = cho_solve(cho_factor(G, lower=True), B.T @ yc)
        resid = yc - B @ beta
        scores[j] = null_ss - float(resid @ resid)
    return scores


def pairwise_distances(A, B):
    return cdist(np.asarray(A, dtype=np.float64), np.asarray(B, dtype=np.float64))
