"""Random sketching matrices restricted to the screened features.

The full ``m x p`` matrix is a Gaussian block on the screened columns and zero
elsewhere, so only the ``m x |I|`` block is ever stored. Entries are plain
N(0, 1) draws with no ``1/sqrt(m)`` scaling; the kernel length-scale absorbs
the overall scale.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .screening import ScreeningResult

# Bump when the draw procedure changes; archived seeds reproduce within a version.
GENERATOR = "numpy.Philox4x64-10/standard_normal-ziggurat"
GENERATOR_VERSION = f"{GENERATOR}@numpy-{np.__version__.split('.')[0]}"


class SketchError(ValueError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def child_seed(root_seed: int, *key: int) -> int:
    """Independent 63-bit seed derived from ``root_seed`` and an integer path."""
    ss = np.random.SeedSequence(int(root_seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class SketchMatrix:
    m: int
    screened: np.ndarray
    gauss_block: np.ndarray
    seed: int | None = None
    generator: str = GENERATOR_VERSION

    def dense(self, p: int) -> np.ndarray:
        """Materialize the full ``m x p`` matrix (testing and small problems only)."""
        P = np.zeros((self.m, p))
        P[:, self.screened] = self.gauss_block
        return P


def generate_sketch(seed: int, m: int, screening: ScreeningResult | np.ndarray) -> SketchMatrix:
    selected = screening.selected if isinstance(screening, ScreeningResult) else screening
    selected = np.asarray(selected, dtype=np.int64).reshape(-1)
    if m < 1:
        raise SketchError(f"sketch dimension m={m} must be >= 1")
    if selected.size == 0:
        raise SketchError("screened index set is empty")
    block = make_rng(seed).standard_normal((m, selected.size))
    block.flags.writeable = False
    selected.flags.writeable = False
    return SketchMatrix(int(m), selected, block, int(seed))


def apply_sketch(s: SketchMatrix, X) -> np.ndarray:
    """Sketched features ``X[:, I] @ G.T`` (one row per sample)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if s.screened.max() >= X.shape[1] or s.screened.min() < 0:
        raise SketchError(f"screened index {int(s.screened.max())} out of bounds for "
                          f"{X.shape[1]} columns")
    return X[:, s.screened] @ s.gauss_block.T
