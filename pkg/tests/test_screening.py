from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skgp import _backend, _core_py
from skgp.dataset import Dataset
from skgp.screening import (ScreeningError, ScreeningResult, bspline_design, marginal_score,
                            quantile_knots, rank_scores, score_features, screen)
from skgp.simgen import SimConfig, gen_swiss_roll


def cox_de_boor(t, i, k, x):
    """Textbook recursion in exact arithmetic, 0/0 taken as 0."""
    if k == 0:
        last = max(j for j in range(len(t) - 1) if t[j] < t[j + 1])
        if t[i] <= x < t[i + 1] or (i == last and x == t[i + 1]):
            return Fraction(1)
        return Fraction(0)
    out = Fraction(0)
    if t[i + k] != t[i]:
        out += (x - t[i]) / (t[i + k] - t[i]) * cox_de_boor(t, i, k - 1, x)
    if t[i + k + 1] != t[i + 1]:
        out += (t[i + k + 1] - x) / (t[i + k + 1] - t[i + 1]) * cox_de_boor(t, i + 1, k - 1, x)
    return out


def test_degree_zero_is_bin_indicator():
    x = np.linspace(0.0, 1.0, 11)
    B = bspline_design(x, degree=0, knot_count=1)
    assert B.shape == (11, 2)
    np.testing.assert_array_equal(B[:, 0], (x < 0.5).astype(float))
    np.testing.assert_array_equal(B[:, 1], (x >= 0.5).astype(float))


def test_cubic_basis_matches_recursion_oracle(rng):
    x = np.sort(rng.uniform(-2.0, 3.0, 50))
    x[0], x[-1] = -2.0, 3.0
    B = bspline_design(x, degree=3, knot_count=4)
    interior = quantile_knots(x, 4)
    t = [Fraction(v) for v in _core_py.full_knot_vector(x.min(), x.max(), interior, 3)]
    expected = np.array([[float(cox_de_boor(t, i, 3, Fraction(xv))) for i in range(8)]
                         for xv in x])
    np.testing.assert_allclose(B, expected, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 4), st.integers(1, 6))
def test_partition_of_unity(seed, degree, knots):
    x = np.random.default_rng(seed).normal(size=40)
    B = bspline_design(x, degree=degree, knot_count=knots)
    assert B.shape == (40, knots + degree + 1)
    np.testing.assert_allclose(B.sum(axis=1), 1.0, atol=1e-12)
    assert (B >= -1e-15).all()


def test_design_errors():
    with pytest.raises(ScreeningError):
        bspline_design(np.ones(20))
    with pytest.raises(ScreeningError):
        bspline_design(np.arange(8.0))


def test_perfect_fit_scores_total_ss(rng):
    x = rng.uniform(size=80)
    y = 2.0 * x - 1.0
    total = float(((y - y.mean()) ** 2).sum())
    assert marginal_score(y, x) == pytest.approx(total, rel=1e-6)


def test_constant_column_scores_zero(rng):
    assert marginal_score(rng.normal(size=30), np.full(30, 4.0)) == 0.0


def test_signal_beats_noise():
    wins = 0
    for r in range(100):
        g = np.random.default_rng(1000 + r)
        xs, xn = g.uniform(size=100), g.uniform(size=100)
        y = np.sin(2 * np.pi * xs) + g.normal(scale=0.5, size=100)
        wins += marginal_score(y, xs) > marginal_score(y, xn)
    assert wins >= 95


def test_swiss_roll_informative_columns_survive():
    hits = 0
    for r in range(50):
        sim = gen_swiss_roll(SimConfig(n=100, n_new=1, p=2000, tau2=0.01, seed=500 + r))
        sel = set(screen(sim.train, 1000).selected.tolist())
        hits += {0, 1, 2} <= sel
    assert hits >= 45


def test_swiss_roll_height_column_ranks_first():
    for r in range(20):
        sim = gen_swiss_roll(SimConfig(n=100, n_new=1, p=2000, tau2=0.01, seed=500 + r))
        assert screen(sim.train, 1000).selected[0] == 1


def test_target_equal_p_ranks_every_column(rng):
    X = rng.normal(size=(40, 12))
    d = Dataset(X, X[:, 3] ** 2 + rng.normal(scale=0.1, size=40))
    res = screen(d, 12)
    assert sorted(res.selected.tolist()) == list(range(12))
    assert res.selected[0] == 3


def test_constant_columns_excluded(rng):
    X = rng.normal(size=(30, 5))
    X[:, 2] = 1.0
    res = screen(Dataset(X, rng.normal(size=30)), 5)
    assert 2 not in res.selected.tolist() and res.selected.size == 4


def test_duplicate_columns_tie_break_to_lower_index(rng):
    X = rng.normal(size=(50, 6))
    X[:, 4] = X[:, 1]
    d = Dataset(X, np.sin(X[:, 1]) + rng.normal(scale=0.05, size=50))
    sel = screen(d, 6).selected.tolist()
    assert sel[:2] == [1, 4]


def test_rank_scores_ties():
    np.testing.assert_array_equal(rank_scores([1.0, 3.0, 3.0, 2.0]), [1, 2, 3, 0])


def test_target_count_bounds(rng):
    d = Dataset(rng.normal(size=(20, 3)), rng.normal(size=20))
    with pytest.raises(ScreeningError):
        screen(d, 4)
    with pytest.raises(ScreeningError):
        screen(d, 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.1, 50.0), st.floats(-100, 100))
def test_affine_invariance_and_nonnegativity(seed, scale, shift):
    g = np.random.default_rng(seed)
    x = g.normal(size=60)
    y = np.cos(x) + g.normal(scale=0.3, size=60)
    a = marginal_score(y, x)
    b = marginal_score(y, scale * x + shift)
    c = marginal_score(y, -x)
    assert a >= -1e-10
    assert b == pytest.approx(a, rel=1e-6, abs=1e-8)
    assert c == pytest.approx(a, rel=1e-6, abs=1e-8)


def test_row_permutation_invariance(rng):
    X = rng.normal(size=(60, 20))
    y = X[:, 0] + rng.normal(size=60)
    perm = rng.permutation(60)
    np.testing.assert_allclose(score_features(X[perm], y[perm]), score_features(X, y),
                               rtol=1e-9, atol=1e-9)


def test_threaded_scores_identical(rng):
    X = rng.normal(size=(50, 1500))
    y = X[:, 7] + rng.normal(size=50)
    np.testing.assert_array_equal(score_features(X, y, threads=3, chunk=256),
                                  score_features(X, y))


def test_result_json_round_trip(tmp_path, rng):
    d = Dataset(rng.normal(size=(30, 8)), rng.normal(size=30))
    res = screen(d, 5)
    res.save(tmp_path / "s.json")
    back = ScreeningResult.load(tmp_path / "s.json")
    np.testing.assert_array_equal(back.selected, res.selected)
    np.testing.assert_array_equal(back.scores, res.scores)
    res.save(tmp_path / "t.json", include_scores=False)
    assert ScreeningResult.load(tmp_path / "t.json").scores is None


@pytest.mark.skipif(_backend.BACKEND != "cython", reason="compiled extension not built")
def test_compiled_kernels_match_fallback(rng):
    from skgp import _core
    X = rng.normal(size=(70, 40))
    X[:, 5] = 2.0
    X[:10, 9] = X[0, 9]
    y = X[:, 0] ** 2 + rng.normal(size=70)
    yc = y - y.mean()
    interior = np.ascontiguousarray(quantile_knots(X, 4).T)
    lo, hi = X.min(axis=0), X.max(axis=0)
    a = _core.screening_scores(X, yc, interior, lo, hi, 3, 1e-8)
    b = _core_py.screening_scores(X, yc, interior, lo, hi, 3, 1e-8)
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-10)
    t = _core_py.full_knot_vector(lo[0], hi[0], interior[0], 3)
    np.testing.assert_allclose(_core.bspline_basis(X[:, 0], t, 3),
                               _core_py.bspline_basis(X[:, 0], t, 3), atol=1e-14)


def test_fallback_selected_by_environment():
    import subprocess
    import sys
    out = subprocess.run([sys.executable, "-c", "import skgp; print(skgp.BACKEND)"],
                         env={"SKGP_PURE_PYTHON": "1", "PATH": ""}, capture_output=True,
                         text=True, check=True)
    assert out.stdout.strip() == "python"
