"""Command-line interface: ``skgp {simulate,screen,fit,predict,bench}``."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import ConfigError, ExperimentConfig, run_replicates, score_predictions, write_results
from .dataset import DataError, Dataset, load_csv, load_features_csv
from .gp import GPError
from .model import BundleError, SkGPConfig, SkGPModel, fit
from .screening import ScreeningError, ScreeningResult, screen
from .simgen import MANIFOLDS, SimConfig, SimConfigError, generate, write_sim
from .sketch import SketchError
from .stacking import StackingError

ERRORS = (DataError, ConfigError, GPError, BundleError, ScreeningError, SimConfigError,
          SketchError, StackingError, OSError)


def _threads(requested: int | None) -> int:
    n = requested or 1
    cap = os.environ.get("SKGP_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _json_dump(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def cmd_simulate(args) -> int:
    cfg = SimConfig(args.manifold, args.n, args.n_new, args.p, args.tau2, args.seed,
                    area_uniform=args.area_uniform)
    paths = write_sim(generate(cfg), args.out, stem=args.stem)
    for k, v in paths.items():
        print(f"{k}: {v}")
    return 0


def _load_train(args) -> Dataset:
    d = load_csv(args.train, args.response)
    if getattr(args, "log_response", False):
        if not (d.response > 0).all():
            raise DataError("--log-response needs a strictly positive response")
        d = Dataset(d.features, np.log(d.response), d.feature_names)
    return d


def cmd_screen(args) -> int:
    d = _load_train(args)
    res = screen(d, min(args.count, d.p), args.degree, args.knots, threads=_threads(args.threads))
    res.save(args.out, include_scores=not args.no_scores)
    print(f"selected {res.selected.size} of {d.p} features -> {args.out}")
    return 0


def cmd_fit(args) -> int:
    d = _load_train(args)
    screening = ScreeningResult.load(args.screening) if args.screening else None
    cfg = SkGPConfig(screen_count=args.screen_count, m=args.m, K=args.k, S=args.folds,
                     seed=args.seed, standardize_features=args.standardize_features,
                     threads=_threads(args.threads))
    model = fit(d, cfg, screening=screening)
    if args.log_response:
        model.response_transform = "log"
    model.save(args.out)
    out = Path(args.out)
    _json_dump(model.report(), args.report or out.with_suffix(".report.json"))
    _json_dump(dict(model.manifest(), train=str(args.train)), out.with_suffix(".manifest.json"))
    print(f"fit {cfg.K} sketched GPs (m={cfg.m}, |I|={model.screening.selected.size}) "
          f"-> {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = SkGPModel.load(args.model)
    X = load_features_csv(args.features, args.response, n_features=model.p)
    pred = model.predict(X, level=args.level)
    point, lower, upper = pred.point, pred.lower, pred.upper
    with Path(args.out).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "point", "lower95", "upper95"])
        for i, (a, b, c) in enumerate(zip(point, lower, upper)):
            w.writerow([i, f"{a:.17g}", f"{b:.17g}", f"{c:.17g}"])
    print(f"predicted {len(point)} rows -> {args.out}")
    return 0


def cmd_bench(args) -> int:
    if args.score_predictions:
        if not args.truth:
            raise ConfigError("--score-predictions needs --truth")
        print(json.dumps(score_predictions(args.score_predictions, args.truth), indent=1))
        return 0
    if not args.config:
        raise ConfigError("bench needs --config (or --score-predictions)")
    exp = ExperimentConfig.from_file(args.config)
    overrides = {k: v for k, v in (("replicates", args.replicates), ("seed", args.seed))
                 if v is not None}
    if overrides:
        exp = ExperimentConfig.from_dict({**dataclasses.asdict(exp), **overrides})
    results = run_replicates(exp, threads=_threads(args.threads or exp.threads))
    paths = write_results(results, args.out)
    for k, v in paths.items():
        print(f"{k}: {v}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skgp", description=__doc__)
    p.add_argument("--version", action="version", version=f"skgp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate swiss-roll or torus train/test CSVs")
    s.add_argument("--manifold", required=True, choices=MANIFOLDS)
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--n-new", type=int, default=100)
    s.add_argument("--p", type=int, default=2000)
    s.add_argument("--tau2", type=float, default=0.01)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--area-uniform", action="store_true",
                   help="sample the torus uniformly in area instead of in angle")
    s.add_argument("--stem", default=None, help="file name stem (default: manifold)")
    s.add_argument("--out", default=".")
    s.set_defaults(func=cmd_simulate)

    def data_args(q):
        q.add_argument("--train", required=True)
        q.add_argument("--response", default="y", help="response column name or index")
        q.add_argument("--log-response", action="store_true")
        q.add_argument("--threads", type=int, default=None)

    s = sub.add_parser("screen", help="rank features by marginal spline fit")
    data_args(s)
    s.add_argument("--count", type=int, default=1000)
    s.add_argument("--degree", type=int, default=3)
    s.add_argument("--knots", type=int, default=4)
    s.add_argument("--no-scores", action="store_true")
    s.add_argument("--out", default="screening.json")
    s.set_defaults(func=cmd_screen)

    s = sub.add_parser("fit", help="fit the stacked sketched-GP ensemble")
    data_args(s)
    s.add_argument("--screen-count", type=int, default=1000)
    s.add_argument("--screening", default=None, help="reuse a screening JSON")
    s.add_argument("--k", type=int, default=20)
    s.add_argument("--m", type=int, default=60)
    s.add_argument("--folds", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--standardize-features", action="store_true")
    s.add_argument("--report", default=None)
    s.add_argument("--out", default="model.npz")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("predict", help="point predictions and 95%% intervals")
    s.add_argument("--model", required=True)
    s.add_argument("--features", required=True)
    s.add_argument("--response", default="y", help="column dropped from the features if present")
    s.add_argument("--level", type=float, default=0.95)
    s.add_argument("--out", default="predictions.csv")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("bench", help="run seeded replicate experiments")
    s.add_argument("--config", default=None)
    s.add_argument("--out", default="bench_out")
    s.add_argument("--threads", type=int, default=None)
    s.add_argument("--replicates", type=int, default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--score-predictions", default=None, metavar="CSV")
    s.add_argument("--truth", default=None, metavar="CSV")
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ERRORS as e:
        print(f"skgp {args.command}: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
