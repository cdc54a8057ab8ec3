"""Select the compiled kernels when available, the numpy ones otherwise.

Set ``SKGP_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _core_py

if os.environ.get("SKGP_PURE_PYTHON", "") not in ("", "0"):
    _core = None
else:
    try:
        from . import _core
    except ImportError:
        _core = None

if _core is not None:
    BACKEND = "cython"
    bspline_basis = _core.bspline_basis
    screening_scores = _core.screening_scores
else:
    BACKEND = "python"
    bspline_basis = _core_py.bspline_basis
    screening_scores = _core_py.screening_scores

# scipy's cdist beats a hand-written loop, so both backends share it
pairwise_distances = _core_py.pairwise_distances

__all__ = ["BACKEND", "bspline_basis", "screening_scores", "pairwise_distances"]
