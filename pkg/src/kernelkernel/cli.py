"""Command-line interface.

Subcommands: ``generate``, ``experiment``, ``fit-predict``, ``rate``, ``study``.
Data goes to files (or stdout); warnings and progress go to stderr.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import time

import numpy as np

from . import io as kio
from ._backend import BACKEND
from .density import DISTANCES, GridMismatchError, auto_grid, default_bandwidth, default_cells, kde_fit
from .experiment import ExperimentConfig, run_experiment
from .kernels import SMOOTHING_FAMILIES, RegressionKernel, SmoothingKernel
from .regressor import KernelPair, LabeledBag, fit, predict_batch, save_model
from .selection import SelectionConfig, select_bandwidths
from .synthetic import (
    BetaTask,
    Dataset,
    TaskCounts,
    derive_seed,
    make_rng,
    sample_beta,
)
from . import theory

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _warn(msg: str) -> None:
    print(f"kernelkernel: {msg}", file=sys.stderr)


def _counts(text: str) -> TaskCounts:
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("counts must be 'train,val,test'")
    try:
        return TaskCounts(*(int(p) for p in parts))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text: str) -> list:
    try:
        return [int(p) for p in str(text).split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _seed(text: str) -> int:
    val = int(text, 0)
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return val


def _out_dir(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {path!r}: {exc}") from None
    if not os.access(path, os.W_OK):
        raise UsageError(f"output directory {path!r} is not writable")
    return path


# -- dataset files ----------------------------------------------------------

def _config_from_args(args, **overrides) -> ExperimentConfig:
    return ExperimentConfig(
        task=args.task,
        counts=args.counts,
        n_per_bag=args.n_per_bag,
        cells_per_dim=getattr(args, "cells", None),
        distance=getattr(args, "distance", None) or "l2",
        trials=getattr(args, "trials", 100),
        noise=args.noise,
        seed=args.seed,
        smoothing=getattr(args, "smoothing", None) or "triangle",
        threads=getattr(args, "threads", None),
        **overrides,
    )


def _write_dataset(out: str, data: Dataset, config: ExperimentConfig) -> None:
    kio.write_points(os.path.join(out, "points.csv"), data.bags)
    kio.write_labels(os.path.join(out, "labels.csv"), data.y)
    with open(os.path.join(out, "splits.csv"), "w", encoding="utf-8") as fh:
        fh.write("bag_id,split,covariate\n")
        for i, (s, c) in enumerate(zip(data.split, data.covariate)):
            fh.write(f"{i},{s},{kio.fmt(c)}\n")
    kio.write_kv(os.path.join(out, "manifest"), {
        "task": config.task,
        "k": data.k,
        "train": config.counts.train,
        "val": config.counts.val,
        "test": config.counts.test,
        "n_per_bag": config.n_per_bag,
        "noise": float(config.noise),
        "seed": config.seed,
        "seed_rule": "seed_i = master xor splitmix64(i)",
    })


def _read_dataset(directory: str) -> Dataset:
    manifest_path = os.path.join(directory, "manifest")
    if not os.path.exists(manifest_path):
        raise kio.DataError(f"{directory}: missing manifest; run 'generate' first")
    manifest = kio.read_config(manifest_path)
    bags = kio.read_points(os.path.join(directory, "points.csv"))
    labels = kio.read_labels(os.path.join(directory, "labels.csv"))
    ys = kio.match_labels(bags, labels, os.path.join(directory, "labels.csv"))
    split, cov = {}, {}
    path = os.path.join(directory, "splits.csv")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "bag_id,split,covariate":
            raise kio.DataError(f"{path}:1: bad header, expected bag_id,split,covariate")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.strip().split(",")
            if len(parts) != 3 or parts[1] not in ("train", "val", "test"):
                raise kio.DataError(f"{path}:{lineno}: malformed split row")
            i = int(parts[0])
            split[i], cov[i] = parts[1], float(parts[2])
    ids = list(bags)
    if ids != list(range(len(ids))):
        raise kio.DataError(f"{directory}: bag ids must be 0..N-1")
    missing = [i for i in ids if i not in split]
    if missing:
        raise kio.DataError(f"{path}: missing split for bag_id {missing[0]}")
    return Dataset(
        bags=list(bags.values()),
        y=np.array(ys),
        covariate=np.array([cov[i] for i in ids]),
        split=[split[i] for i in ids],
        k=int(manifest.get("k", next(iter(bags.values())).k)),
        task=manifest.get("task", "custom"),
    )


# -- commands -------------------------------------------------------------

def cmd_generate(args) -> int:
    if args.task == "custom":
        raise UsageError("the custom task has no generator")
    config = _config_from_args(args)
    out = _out_dir(args.out)
    data = config.generate()
    _write_dataset(out, data, config)
    _warn(f"wrote {len(data.bags)} bags (k={data.k}) to {out}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    config = _config_from_args(args)
    out = _out_dir(args.out)
    if args.data:
        data = _read_dataset(args.data)
        config.task = data.task if data.task in ("beta-skewness", "gauss-entropy") else "custom"
    elif config.task == "custom":
        raise UsageError("the custom task needs --data")
    else:
        data = config.generate()
    _warn(f"running {config.task}: {len(data.bags)} bags, {config.trials} trials, backend={BACKEND}")
    result = run_experiment(config, data)
    kio.write_predictions(os.path.join(out, "predictions.csv"),
                          [r[0] for r in result.rows], [r[3] for r in result.rows],
                          [r[2] for r in result.rows])
    with open(os.path.join(out, "figure.csv"), "w", encoding="utf-8") as fh:
        fh.write("bag_id,covariate,y_true,y_pred\n")
        for i, c, t, p in result.rows:
            fh.write(f"{i},{kio.fmt(c)},{kio.fmt(t)},{kio.fmt(p)}\n")
    result.selection.to_csv(os.path.join(out, "trace.csv"))
    summary = dict(task=config.task, distance=config.distance, seed=config.seed,
                   trials=config.trials, **result.summary())
    kio.write_kv(os.path.join(out, "summary"), summary)
    kio.write_kv(os.path.join(out, "timing"), {"wall_time": f"{result.wall_time:.3f}",
                                                "backend": BACKEND})
    for key in ("test_mse", "relative_mse", "b", "h"):
        print(f"{key}={kio.fmt(summary[key])}")
    return EXIT_OK


def _labeled(points_path, labels_path) -> tuple:
    bags = kio.read_points(points_path)
    ys = kio.match_labels(bags, kio.read_labels(labels_path), labels_path)
    return list(bags), [LabeledBag(bag, y) for bag, y in zip(bags.values(), ys)]


def cmd_fit_predict(args) -> int:
    if not args.select and (args.b is None or args.h is None):
        raise UsageError("give both --b and --h, or --select")
    if args.b is not None and not args.b > 0 or args.h is not None and not args.h > 0:
        raise UsageError("--b and --h must be positive")
    train_ids, train = _labeled(args.train, args.labels)
    test_bags = kio.read_points(args.test)
    test_ids = list(test_bags)
    test_true = None
    if args.test_labels:
        test_true = kio.match_labels(test_bags, kio.read_labels(args.test_labels), args.test_labels)
    val = []
    if args.val:
        if not args.val_labels:
            raise UsageError("--val needs --val-labels")
        _, val = _labeled(args.val, args.val_labels)

    k = train[0].bag.k
    for name, bags in (("test", list(test_bags.values())), ("validation", [v.bag for v in val]),
                       ("training", [t.bag for t in train])):
        bad = [b for b in bags if b.k != k]
        if bad:
            raise kio.DataError(f"{name} bag has dimension {bad[0].k}, training bags have {k}")
    kernels = KernelPair(SmoothingKernel(args.smoothing), RegressionKernel())
    cells = args.cells or default_cells(k)
    distance = args.distance or "l1"

    if args.select:
        sel_cfg = SelectionConfig(trials=args.trials, seed=args.seed)
        if not val:
            # hold out a seeded 10% of the training bags
            if len(train) < 2:
                raise kio.DataError("--select without --val needs at least two training bags")
            n_val = max(1, len(train) // 10)
            perm = make_rng(derive_seed(args.seed, 0)).permutation(len(train))
            held = set(perm[:n_val].tolist())
            val = [t for i, t in enumerate(train) if i in held]
            train_fit = [t for i, t in enumerate(train) if i not in held]
        else:
            train_fit = train
        b_max = max(sel_cfg.range_b[1], args.b or 0.0)
        all_bags = [t.bag for t in train] + [v.bag for v in val] + list(test_bags.values())
        grid = auto_grid(all_bags, cells, b_max, kernels.smoothing.support_radius)
        sel = select_bandwidths(train_fit, val, sel_cfg, distance, kernels, grid, args.threads)
        b, h = sel.best_b, sel.best_h
        _warn(f"selected b={b:.6g} h={h:.6g} (validation mse {sel.best_mse:.6g})")
        if args.trace:
            sel.to_csv(args.trace)
    else:
        b, h = args.b, args.h
        all_bags = [t.bag for t in train] + [v.bag for v in val] + list(test_bags.values())
        grid = auto_grid(all_bags, cells, b, kernels.smoothing.support_radius)

    model = fit(train, h, b, distance, kernels, grid, args.threads)
    if args.save_model:
        save_model(model, args.save_model)
    preds = predict_batch(model, list(test_bags.values()), args.threads)
    zero = [i for i, q in zip(test_ids, model_zero_mask(model, test_bags.values())) if q]
    if zero:
        _warn(f"all kernel weights vanished for {len(zero)} test bag(s) "
              f"(first bag_id {zero[0]}); predicted 0")
    if args.out:
        kio.write_predictions(args.out, test_ids, preds, test_true)
    else:
        tmp = sys.stdout
        if test_true is None:
            tmp.write("bag_id,y_pred\n")
            for i, p in zip(test_ids, preds):
                tmp.write(f"{i},{kio.fmt(p)}\n")
        else:
            tmp.write("bag_id,y_true,y_pred\n")
            for i, t, p in zip(test_ids, test_true, preds):
                tmp.write(f"{i},{kio.fmt(t)},{kio.fmt(p)}\n")
    return EXIT_OK


def model_zero_mask(model, queries) -> list:
    """True where every kernel weight of a query is exactly zero."""
    return [float(np.sum(model.weights(model.query_density(q)))) == 0.0 for q in queries]


def cmd_rate(args) -> int:
    try:
        spec = theory.RateSpec(args.beta, args.d, args.k, args.m, args.n, args.noiseless)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    text = theory.risk_rate(spec).as_text()
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK


def _beta_family(args, kernel: SmoothingKernel):
    """Densities of ``args.bags`` Beta(a, 3) bags with a ~ U[3, 20]."""
    task = BetaTask(n_per_bag=args.n)
    lo, hi = task.a_range
    a = make_rng(derive_seed(args.seed, 1 << 40)).uniform(lo, hi, args.bags)
    bags = [sample_beta(float(ai), task.b_fixed, args.n, derive_seed(args.seed, i))
            for i, ai in enumerate(a)]
    b = default_bandwidth(args.n, 1)
    grid = auto_grid(bags, args.cells or default_cells(1), b, kernel.support_radius)
    return a, bags, b, grid


def cmd_study(args) -> int:
    out = _out_dir(args.out)
    kernel = SmoothingKernel(args.smoothing)
    distance = args.distance or "l1"
    if args.kind == "kde-risk":
        study = theory.kde_l1_risk_study(theory.uniform_density(1), args.ns, args.reps, 1,
                                         kernel, args.seed, args.cells)
        with open(os.path.join(out, "kde_risk.csv"), "w", encoding="utf-8") as fh:
            fh.write("n,rep,l1_error\n")
            for n, rep, err in study.rows:
                fh.write(f"{n},{rep},{kio.fmt(err)}\n")
        with open(os.path.join(out, "kde_risk_summary.csv"), "w", encoding="utf-8") as fh:
            fh.write("n,mean_error\n")
            for n, err in study.summary:
                fh.write(f"{n},{kio.fmt(err)}\n")
        kio.write_kv(os.path.join(out, "kde_risk_report"), {"slope": study.slope, "target": -1.0 / 3.0})
        print(f"slope={kio.fmt(study.slope)}")
        return EXIT_OK

    a, bags, b, grid = _beta_family(args, kernel)
    densities = [kde_fit(bag, b, kernel, grid) for bag in bags]
    if args.kind == "small-ball":
        center_bag = sample_beta(args.center_a, 3.0, args.n, derive_seed(args.seed, (1 << 40) + 7))
        center = kde_fit(center_bag, b, kernel, grid)
        prob = theory.small_ball_estimate(densities, center, args.radius, distance)
        radii = np.linspace(args.radius / 10, 2 * args.radius, 20)
        with open(os.path.join(out, "small_ball.csv"), "w", encoding="utf-8") as fh:
            fh.write("radius,probability\n")
            for r in radii:
                fh.write(f"{kio.fmt(r)},{kio.fmt(theory.small_ball_estimate(densities, center, r, distance))}\n")
        kio.write_kv(os.path.join(out, "small_ball_report"),
                     {"center_a": float(args.center_a), "radius": float(args.radius), "probability": prob})
        print(f"probability={kio.fmt(prob)}")
        return EXIT_OK

    # doubling
    radii = theory.default_radii(densities, densities, distance)
    fitres = theory.doubling_fit(densities, densities, radii, args.eps, distance)
    with open(os.path.join(out, "doubling_counts.csv"), "w", encoding="utf-8") as fh:
        fh.write("center,radius,outer_count,inner_count,retained\n")
        for ci, r, o, i, ok in fitres.rows:
            fh.write(f"{ci},{kio.fmt(r)},{o},{i},{int(ok)}\n")
    kio.write_kv(os.path.join(out, "doubling_report"),
                 {"d_hat": fitres.d_hat, "eps": float(args.eps), "retained_pairs": fitres.retained})
    print(f"d_hat={kio.fmt(fitres.d_hat)}")
    return EXIT_OK


# -- parser ---------------------------------------------------------------

def _add_common(p, task_default="beta-skewness"):
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", default=".")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)


def _add_task(p):
    p.add_argument("--task", choices=("beta-skewness", "gauss-entropy", "custom"), default="beta-skewness")
    p.add_argument("--counts", type=_counts, default=TaskCounts(), help="train,val,test")
    p.add_argument("--n-per-bag", type=int, default=500)
    p.add_argument("--noise", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kernelkernel",
                                     description="Kernel-kernel distribution regression")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset")
    _add_common(p)
    _add_task(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("experiment", help="run a synthetic experiment end to end")
    _add_common(p)
    _add_task(p)
    p.add_argument("--data", help="dataset directory written by 'generate'")
    p.add_argument("--cells", type=int, default=None)
    p.add_argument("--distance", choices=DISTANCES, default="l2")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--smoothing", choices=SMOOTHING_FAMILIES, default="triangle")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("fit-predict", help="fit on CSV bags and predict test bags")
    _add_common(p)
    p.set_defaults(out=None)
    p.add_argument("--train", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--test-labels")
    p.add_argument("--val")
    p.add_argument("--val-labels")
    p.add_argument("--b", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--select", action="store_true")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--trace", help="write the selection trace CSV here")
    p.add_argument("--distance", choices=DISTANCES, default="l1")
    p.add_argument("--cells", type=int, default=None)
    p.add_argument("--smoothing", choices=SMOOTHING_FAMILIES, default="epanechnikov")
    p.add_argument("--noise", type=float, default=0.0, help="accepted for symmetry; unused")
    p.add_argument("--save-model", help="directory to serialize the fitted model into")
    p.set_defaults(func=cmd_fit_predict)

    p = sub.add_parser("rate", help="risk rate for (beta, d, k, m, n)")
    p.add_argument("--config")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--noiseless", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("study", help="diagnostic studies")
    _add_common(p)
    p.add_argument("kind", choices=("kde-risk", "doubling", "small-ball"))
    p.add_argument("--ns", type=_int_list, default=[250, 500, 1000, 2000, 4000])
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--bags", type=int, default=500)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--radius", type=float, default=0.2)
    p.add_argument("--center-a", type=float, default=10.0)
    p.add_argument("--distance", choices=DISTANCES, default="l1")
    p.add_argument("--cells", type=int, default=None)
    p.add_argument("--smoothing", choices=SMOOTHING_FAMILIES, default="epanechnikov")
    p.set_defaults(func=cmd_study)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list) -> argparse.Namespace:
    args = parser.parse_args(argv)
    path = getattr(args, "config", None)
    if not path:
        return args
    try:
        values = kio.read_config(path)
    except OSError as exc:
        parser.error(f"cannot read config {path!r}: {exc}")
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in values.items():
        dest = key.replace("-", "_")
        action = actions.get(dest)
        if action is None or dest in ("config", "help"):
            parser.error(f"{path}: unknown key {key!r} for '{args.command}'")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[dest] = raw.lower() in ("1", "true", "yes", "on")
            continue
        try:
            val = action.type(raw) if action.type else raw
        except (ValueError, argparse.ArgumentTypeError) as exc:
            parser.error(f"{path}: bad value for {key!r}: {exc}")
        if action.choices is not None and val not in action.choices:
            parser.error(f"{path}: {key!r} must be one of {list(action.choices)}")
        defaults[dest] = val
    for action in subparser._actions:
        if action.dest in defaults:
            action.required = False
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        _warn(f"usage error: {exc}")
        return EXIT_USAGE
    except (kio.DataError, GridMismatchError, OSError) as exc:
        _warn(f"data error: {exc}")
        return EXIT_DATA
    except (ValueError, FloatingPointError, ArithmeticError) as exc:
        _warn(f"numeric failure: {exc}")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
