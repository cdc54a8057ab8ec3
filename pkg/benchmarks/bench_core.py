"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_core.py [--n 100] [--p 2000] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from skgp import _core_py
from skgp.screening import quantile_knots

try:
    from skgp import _core
except ImportError:
    _core = None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--p", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    X = rng.normal(size=(args.n, args.p))
    y = X[:, 0] ** 2 + rng.normal(size=args.n)
    yc = y - y.mean()
    interior = np.ascontiguousarray(quantile_knots(X, 4).T)
    lo, hi = X.min(axis=0), X.max(axis=0)

    cases = {
        f"screening_scores {args.n}x{args.p}":
            lambda mod: mod.screening_scores(X, yc, interior, lo, hi, 3, 1e-8),
    }
    backends = {"python": _core_py}
    if _core is not None:
        backends["cython"] = _core
    else:
        print("compiled extension not built; timing the fallback only")

    print(f"{'kernel':36s}" + "".join(f"{b:>12s}" for b in backends) + "     speedup")
    for name, fn in cases.items():
        times = {b: min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
                 for b, mod in backends.items()}
        row = f"{name:36s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times.values())
        if "cython" in times:
            row += f"  {times['python'] / times['cython']:8.1f}x"
        print(row)
        if "cython" in backends:
            a, b = fn(_core_py), fn(_core)
            assert np.allclose(a, b, rtol=1e-10, atol=1e-10), f"{name}: backends disagree"


if __name__ == "__main__":
    main()
