"""Sketched Gaussian process regression with log-score stacking."""
__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
from .dataset import Dataset, load_csv, make_folds, standardize, write_csv  # noqa: E402
from .model import SkGPConfig, SkGPModel, fit  # noqa: E402

__all__ = ["BACKEND", "Dataset", "SkGPConfig", "SkGPModel", "fit", "load_csv", "make_folds",
           "standardize", "write_csv", "__version__"]
