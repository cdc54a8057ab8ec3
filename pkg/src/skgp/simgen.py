"""Noisy-manifold regression benchmarks: swiss roll (d=2) and torus (d=3).

Signal coordinates occupy the first three columns; every other column is
pure N(0, tau2) noise. Two independent streams are derived from the seed:
one for the manifold, the noise of the signal columns and the response, and
one for the ambient noise columns, so the response never depends on the
latter.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset, write_csv
from .sketch import GENERATOR_VERSION

MANIFOLDS = ("swiss_roll", "torus")
SWISS_ROLL_NOISE_SD = 0.02
TORUS_NOISE_SD = 0.1


class SimConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    manifold: str = "swiss_roll"
    n: int = 100
    n_new: int = 100
    p: int = 2000
    tau2: float = 0.01
    seed: int = 0
    area_uniform: bool = False
    noise_seed: int | None = None

    def validate(self) -> None:
        if self.manifold not in MANIFOLDS:
            raise SimConfigError(f"manifold must be one of {MANIFOLDS}, got {self.manifold!r}")
        if self.p < 3:
            raise SimConfigError(f"p={self.p} must be >= 3")
        if self.tau2 < 0:
            raise SimConfigError(f"tau2={self.tau2} must be >= 0")
        if self.n < 1 or self.n_new < 1:
            raise SimConfigError("n and n_new must be >= 1")


@dataclass(frozen=True)
class SimData:
    train: Dataset
    test: Dataset
    latent_train: np.ndarray
    latent_test: np.ndarray
    config: SimConfig


def _streams(cfg: SimConfig):
    signal_ss, ambient_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    if cfg.noise_seed is not None:
        ambient_ss = np.random.SeedSequence(cfg.noise_seed).spawn(2)[1]
    return (np.random.Generator(np.random.Philox(signal_ss)),
            np.random.Generator(np.random.Philox(ambient_ss)))


def _swiss_roll_block(rng, size, tau):
    o1 = rng.uniform(1.5 * np.pi, 4.5 * np.pi, size)
    o2 = rng.uniform(0.0, 3.0, size)
    eta = tau * rng.standard_normal((size, 3))
    eps = SWISS_ROLL_NOISE_SD * rng.standard_normal(size)
    X = np.column_stack([o1 * np.cos(o1), o2, o1 * np.sin(o1)]) + eta
    y = np.sin(5 * np.pi * o1) + o2 ** 2 + eps
    return X, y, np.column_stack([o1, o2])


def _torus_angles(rng, size, area_uniform):
    u = rng.uniform(0.0, 2 * np.pi, size)
    if not area_uniform:
        return u, rng.uniform(0.0, 2 * np.pi, size)
    # surface element is proportional to (3 + cos v); accept with prob (3 + cos v) / 4
    v = np.empty(size)
    filled = 0
    while filled < size:
        cand = rng.uniform(0.0, 2 * np.pi, 2 * (size - filled) + 8)
        keep = cand[rng.uniform(0.0, 4.0, cand.size) < 3 + np.cos(cand)]
        take = min(keep.size, size - filled)
        v[filled:filled + take] = keep[:take]
        filled += take
    return u, v


def _torus_block(rng, size, tau, area_uniform):
    u, v = _torus_angles(rng, size, area_uniform)
    r = 3 + np.cos(v)
    o = np.column_stack([r * np.cos(u), r * np.sin(u), np.sin(v)])
    eta = tau * rng.standard_normal((size, 3))
    eps = TORUS_NOISE_SD * rng.standard_normal(size)
    y = o[:, 1] ** 2 + np.sin(5 * np.pi * o[:, 2]) + eps
    return o + eta, y, o


def _generate(cfg: SimConfig, block) -> SimData:
    cfg.validate()
    tau = float(np.sqrt(cfg.tau2))
    sig_rng, amb_rng = _streams(cfg)
    Xs_tr, y_tr, lat_tr = block(sig_rng, cfg.n, tau)
    Xs_te, y_te, lat_te = block(sig_rng, cfg.n_new, tau)
    amb_tr = tau * amb_rng.standard_normal((cfg.n, cfg.p - 3))
    amb_te = tau * amb_rng.standard_normal((cfg.n_new, cfg.p - 3))
    names = tuple(f"x{j + 1}" for j in range(cfg.p))
    train = Dataset(np.hstack([Xs_tr, amb_tr]), y_tr, names)
    test = Dataset(np.hstack([Xs_te, amb_te]), y_te, names)
    return SimData(train, test, lat_tr, lat_te, cfg)


def gen_swiss_roll(cfg: SimConfig) -> SimData:
    return _generate(cfg, _swiss_roll_block)


def gen_torus(cfg: SimConfig) -> SimData:
    return _generate(cfg, lambda rng, size, tau: _torus_block(rng, size, tau, cfg.area_uniform))


def generate(cfg: SimConfig) -> SimData:
    cfg.validate()
    return gen_swiss_roll(cfg) if cfg.manifold == "swiss_roll" else gen_torus(cfg)


def write_sim(data: SimData, out_dir, stem: str | None = None) -> dict:
    """Write train/test CSVs and a JSON sidecar; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or data.config.manifold
    paths = {
        "train": out / f"{stem}_train.csv",
        "test": out / f"{stem}_test.csv",
        "sidecar": out / f"{stem}.json",
    }
    write_csv(data.train, paths["train"])
    write_csv(data.test, paths["test"])
    sidecar = {
        "config": asdict(data.config),
        "generator": GENERATOR_VERSION,
        "latent_train": data.latent_train.tolist(),
        "latent_test": data.latent_test.tolist(),
    }
    paths["sidecar"].write_text(json.dumps(sidecar, indent=1))
    return {k: str(v) for k, v in paths.items()}
