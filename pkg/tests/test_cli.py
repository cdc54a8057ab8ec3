import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from skgp.cli import main

FAST_FIT = ["--screen-count", "30", "--m", "6", "--k", "3", "--folds", "5"]


def _simulate(out, *extra):
    return main(["simulate", "--manifold", "swiss_roll", "--n", "40", "--n-new", "10",
                 "--p", "60", "--tau2", "0.01", "--seed", "7", "--out", str(out), *extra])


@pytest.fixture
def sim_dir(tmp_path):
    assert _simulate(tmp_path) == 0
    return tmp_path


def test_simulate_writes_csvs_and_sidecar(sim_dir):
    names = sorted(p.name for p in sim_dir.iterdir())
    assert names == ["swiss_roll.json", "swiss_roll_test.csv", "swiss_roll_train.csv"]


def test_simulate_deterministic(sim_dir, tmp_path_factory):
    other = tmp_path_factory.mktemp("again")
    assert _simulate(other) == 0
    for name in ("swiss_roll_train.csv", "swiss_roll_test.csv", "swiss_roll.json"):
        assert (sim_dir / name).read_bytes() == (other / name).read_bytes()


def test_simulate_requires_manifold(tmp_path):
    out = subprocess.run([sys.executable, "-m", "skgp.cli", "simulate", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert out.returncode != 0 and "--manifold" in out.stderr


def test_fit_then_predict(sim_dir):
    model = sim_dir / "model.npz"
    assert main(["fit", "--train", str(sim_dir / "swiss_roll_train.csv"), "--out", str(model),
                 *FAST_FIT]) == 0
    pred = sim_dir / "pred.csv"
    assert main(["predict", "--model", str(model), "--features",
                 str(sim_dir / "swiss_roll_test.csv"), "--out", str(pred)]) == 0
    with open(pred) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["index", "point", "lower95", "upper95"]
    assert len(rows) == 10
    assert all(float(r["lower95"]) <= float(r["point"]) <= float(r["upper95"]) for r in rows)
    report = json.loads((sim_dir / "model.report.json").read_text())
    assert len(report["weights"]) == 3
    manifest = json.loads((sim_dir / "model.manifest.json").read_text())
    assert set(manifest["timings"]) == {"standardize", "screening", "sketch_and_hyper",
                                        "stacking"}


def test_single_model_weight(sim_dir):
    assert main(["fit", "--train", str(sim_dir / "swiss_roll_train.csv"), "--out",
                 str(sim_dir / "one.npz"), "--screen-count", "30", "--m", "6", "--k", "1",
                 "--folds", "5"]) == 0
    assert json.loads((sim_dir / "one.report.json").read_text())["weights"] == [1.0]


def test_refit_byte_identical_report(sim_dir):
    for name in ("a", "b"):
        assert main(["fit", "--train", str(sim_dir / "swiss_roll_train.csv"), "--out",
                     str(sim_dir / f"{name}.npz"), "--seed", "5", *FAST_FIT]) == 0
    assert (sim_dir / "a.report.json").read_bytes() == (sim_dir / "b.report.json").read_bytes()


def test_predict_rejects_wrong_width(sim_dir, capsys):
    model = sim_dir / "model.npz"
    main(["fit", "--train", str(sim_dir / "swiss_roll_train.csv"), "--out", str(model),
          *FAST_FIT])
    bad = sim_dir / "bad.csv"
    bad.write_text("x1,x2\n1,2\n")
    assert main(["predict", "--model", str(model), "--features", str(bad)]) == 1
    assert "expected 60 feature columns" in capsys.readouterr().err


def test_log_response_round_trip(tmp_path):
    g = np.random.default_rng(0)
    X = g.normal(size=(30, 4))
    y = np.exp(0.5 * X[:, 0] + 0.1 * g.normal(size=30))
    path = tmp_path / "d.csv"
    np.savetxt(path, np.column_stack([X, y]), delimiter=",", header="a,b,c,d,y", comments="")
    model = tmp_path / "m.npz"
    assert main(["fit", "--train", str(path), "--out", str(model), "--log-response",
                 "--screen-count", "4", "--m", "3", "--k", "2", "--folds", "5"]) == 0
    pred = tmp_path / "p.csv"
    assert main(["predict", "--model", str(model), "--features", str(path),
                 "--out", str(pred)]) == 0
    vals = np.loadtxt(pred, delimiter=",", skiprows=1)
    assert (vals[:, 1:] > 0).all()
    assert np.corrcoef(vals[:, 1], y)[0, 1] > 0.8


def test_screen_command(sim_dir):
    out = sim_dir / "scr.json"
    assert main(["screen", "--train", str(sim_dir / "swiss_roll_train.csv"), "--count", "10",
                 "--out", str(out)]) == 0
    sel = json.loads(out.read_text())["selected"]
    assert len(sel) == 10 and sel[0] == 1
    assert main(["fit", "--train", str(sim_dir / "swiss_roll_train.csv"), "--screening",
                 str(out), "--out", str(sim_dir / "s.npz"), "--m", "4", "--k", "2",
                 "--folds", "5"]) == 0


def _bench_config(tmp_path, **extra):
    cfg = dict(manifold="torus", p=30, n=30, n_new=10, screen_count=10, m=4, K=2, S=5,
               replicates=3, seed=1, **extra)
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(cfg))
    return path


def test_bench_threads_identical(tmp_path):
    cfg = _bench_config(tmp_path)
    assert main(["bench", "--config", str(cfg), "--out", str(tmp_path / "t1"),
                 "--threads", "1"]) == 0
    assert main(["bench", "--config", str(cfg), "--out", str(tmp_path / "t8"),
                 "--threads", "8"]) == 0
    assert (tmp_path / "t1" / "results.csv").read_bytes() == \
        (tmp_path / "t8" / "results.csv").read_bytes()
    with open(tmp_path / "t1" / "summary.csv") as fh:
        metrics = [r["metric"] for r in csv.DictReader(fh)]
    assert metrics == ["mspe", "coverage", "median_length"]


def test_bench_malformed_config(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"manifold": "torus", "m": "sixty"}))
    assert main(["bench", "--config", str(path)]) == 1
    assert "'m'" in capsys.readouterr().err


def test_thread_cap_env(monkeypatch):
    from skgp.cli import _threads
    monkeypatch.setenv("SKGP_THREADS", "2")
    assert _threads(8) == 2
    monkeypatch.delenv("SKGP_THREADS")
    assert _threads(None) == 1
