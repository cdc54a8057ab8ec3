import numpy as np
import pytest

from skgp import SkGPConfig, fit
from skgp.model import BundleError, SkGPModel
from skgp.simgen import SimConfig, generate


@pytest.fixture(scope="module")
def fitted():
    sim = generate(SimConfig(n=40, n_new=8, p=50, seed=2))
    cfg = SkGPConfig(screen_count=20, m=5, K=3, S=5, seed=4)
    return sim, fit(sim.train, cfg)


def test_bundle_round_trip(tmp_path, fitted):
    sim, model = fitted
    model.save(tmp_path / "m.npz")
    back = SkGPModel.load(tmp_path / "m.npz")
    a, b = model.predict(sim.test.features), back.predict(sim.test.features)
    np.testing.assert_array_equal(a.point, b.point)
    np.testing.assert_array_equal(a.lower, b.lower)
    np.testing.assert_array_equal(back.weights.w, model.weights.w)
    assert back.report() == model.report()


def test_bundle_rejects_other_generator(tmp_path, fitted, monkeypatch):
    _, model = fitted
    model.save(tmp_path / "m.npz")
    import skgp.model as mod
    monkeypatch.setattr(mod, "GENERATOR_VERSION", "other")
    with pytest.raises(BundleError, match="other"):
        SkGPModel.load(tmp_path / "m.npz")


def test_threads_do_not_change_fit(fitted):
    sim, model = fitted
    again = fit(sim.train, SkGPConfig(screen_count=20, m=5, K=3, S=5, seed=4, threads=3))
    np.testing.assert_array_equal(again.weights.w, model.weights.w)
    np.testing.assert_array_equal(again.table.values, model.table.values)


def test_interval_brackets_point(fitted):
    sim, model = fitted
    pred = model.predict(sim.test.features)
    assert (pred.lower <= pred.point).all() and (pred.point <= pred.upper).all()
    wider = model.predict(sim.test.features, level=0.99)
    assert (wider.upper - wider.lower >= pred.upper - pred.lower).all()


def test_wrong_width_rejected(fitted):
    with pytest.raises(BundleError):
        fitted[1].predict(np.zeros((2, 7)))
