# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for the spline screening fits.

Numerically equivalent to ``_core_py``; the heavy loops run without the GIL
so callers can split columns across threads.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef inline Py_ssize_t _find_span(const double* t, Py_ssize_t nt, int degree,
                                  Py_ssize_t last, double x) noexcept nogil:
    # last index i with t[i] <= x, clipped into [degree, last]
    cdef Py_ssize_t lo = 0, hi = nt, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if t[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    lo -= 1
    if lo < degree:
        lo = degree
    if lo > last:
        lo = last
    return lo


cdef inline void _local_basis(const double* t, Py_ssize_t span, int degree, double x,
                              double* N, double* left, double* right) noexcept nogil:
    cdef int j, r
    cdef double saved, temp
    N[0] = 1.0
    for j in range(1, degree + 1):
        left[j] = x - t[span + 1 - j]
        right[j] = t[span + j] - x
        saved = 0.0
        for r in range(j):
            temp = N[r] / (right[r + 1] + left[j - r])
            N[r] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        N[j] = saved


cdef Py_ssize_t _last_nonempty(const double* t, Py_ssize_t nt, int degree) noexcept nogil:
    cdef Py_ssize_t nbasis = nt - degree - 1
    cdef Py_ssize_t i, last = degree
    for i in range(degree, nbasis):
        if t[i] < t[i + 1]:
            last = i
    return last


cdef int _cholesky_solve(double* G, double* c, int k) noexcept nogil:
    # in-place lower Cholesky of the k x k row-major G, then solve G z = c into c
    cdef int i, j, l
    cdef double s
    for j in range(k):
        s = G[j * k + j]
        for l in range(j):
            s -= G[j * k + l] * G[j * k + l]
        if s <= 0.0:
            return -1
        G[j * k + j] = sqrt(s)
        for i in range(j + 1, k):
            s = G[i * k + j]
            for l in range(j):
                s -= G[i * k + l] * G[j * k + l]
            G[i * k + j] = s / G[j * k + j]
    for i in range(k):
        s = c[i]
        for l in range(i):
            s -= G[i * k + l] * c[l]
        c[i] = s / G[i * k + i]
    for i in range(k - 1, -1, -1):
        s = c[i]
        for l in range(i + 1, k):
            s -= G[l * k + i] * c[l]
        c[i] = s / G[i * k + i]
    return 0


def bspline_basis(x, t, int degree):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], nt = tv.shape[0]
    cdef Py_ssize_t nbasis = nt - degree - 1
    out = np.zeros((n, nbasis))
    cdef double[:, ::1] ov = out
    cdef double* N = <double*> malloc(3 * (degree + 1) * sizeof(double))
    cdef double* left = N + (degree + 1)
    cdef double* right = left + (degree + 1)
    cdef Py_ssize_t i, span, last
    cdef int r
    if N == NULL:
        raise MemoryError()
    try:
        with nogil:
            last = _last_nonempty(&tv[0], nt, degree)
            for i in range(n):
                span = _find_span(&tv[0], nt, degree, last, xv[i])
                _local_basis(&tv[0], span, degree, xv[i], N, left, right)
                for r in range(degree + 1):
                    ov[i, span - degree + r] = N[r]
    finally:
        free(N)
    return out


def screening_scores(X, yc, interior, lo, hi, int degree, double ridge):
    cdef const double[::1, :] Xv = np.asfortranarray(X, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(yc, dtype=np.float64)
    cdef const double[:, ::1] kv = np.ascontiguousarray(interior, dtype=np.float64)
    cdef const double[::1] lov = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] hiv = np.ascontiguousarray(hi, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], p = Xv.shape[1], nk = kv.shape[1]
    cdef Py_ssize_t nt = nk + 2 * (degree + 1)
    cdef int k = <int> (nt - degree - 1)
    cdef int d1 = degree + 1
    scores = np.zeros(p)
    cdef double[::1] sv = scores

    cdef double* t = <double*> malloc(nt * sizeof(double))
    cdef double* G = <double*> malloc(k * k * sizeof(double))
    cdef double* c = <double*> malloc(k * sizeof(double))
    cdef double* N = <double*> malloc(3 * d1 * sizeof(double))
    cdef double* Nall = <double*> malloc(n * d1 * sizeof(double))
    cdef Py_ssize_t* spans = <Py_ssize_t*> malloc(n * sizeof(Py_ssize_t))
    cdef double* left
    cdef double* right
    cdef Py_ssize_t i, j, a, b, last, span, off
    cdef double null_ss = 0.0, rss, fitted, yi
    cdef int status = 0
    if t == NULL or G == NULL or c == NULL or N == NULL or Nall == NULL or spans == NULL:
        free(t); free(G); free(c); free(N); free(Nall); free(spans)
        raise MemoryError()
    left = N + d1
    right = left + d1
    try:
        with nogil:
            for i in range(n):
                null_ss += yv[i] * yv[i]
            for j in range(p):
                if not hiv[j] > lov[j]:
                    continue
                for a in range(d1):
                    t[a] = lov[j]
                    t[nt - 1 - a] = hiv[j]
                for a in range(nk):
                    t[d1 + a] = kv[j, a]
                last = _last_nonempty(t, nt, degree)
                for a in range(k * k):
                    G[a] = 0.0
                for a in range(k):
                    c[a] = 0.0
                for i in range(n):
                    span = _find_span(t, nt, degree, last, Xv[i, j])
                    spans[i] = span
                    _local_basis(t, span, degree, Xv[i, j], &Nall[i * d1], left, right)
                    off = span - degree
                    yi = yv[i]
                    for a in range(d1):
                        c[off + a] += Nall[i * d1 + a] * yi
                        for b in range(d1):
                            G[(off + a) * k + off + b] += Nall[i * d1 + a] * Nall[i * d1 + b]
                for a in range(k):
                    G[a * k + a] += ridge
                if _cholesky_solve(G, c, k) != 0:
                    status = -1
                    break
                rss = 0.0
                for i in range(n):
                    off = spans[i] - degree
                    fitted = 0.0
                    for a in range(d1):
                        fitted += Nall[i * d1 + a] * c[off + a]
                    rss += (yv[i] - fitted) * (yv[i] - fitted)
                sv[j] = null_ss - rss
    finally:
        free(t); free(G); free(c); free(N); free(Nall); free(spans)
    if status != 0:
        raise ArithmeticError("normal equations not positive definite")
    return scores
