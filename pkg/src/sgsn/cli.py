"""Command-line interface: dataset generation, single solves, and fold benchmarks.

Trace CSVs are written with 17-significant-digit floats and, by default,
a zeroed wall_ns column so identical invocations produce byte-identical
files; pass --timing to record real per-iteration wall times (which breaks
byte-stability across runs). Wall-clock totals always live in the summary.

Exit codes: 0 converged, 1 internal error, 2 usage error, 3 iteration
budget exhausted (or stagnation).
"""

import argparse
import concurrent.futures
import json
import sys
import time
from dataclasses import asdict

import numpy as np

from ._backend import backend_name
from .baseline import solve_prox_gradient
from .data import (Dataset, FeatureScaler, gen_example1, gen_example3, kfold_splits,
                   holdout_split, load_libsvm, save_libsvm, subset)
from .solver import solve
from .tasks import auc_metric, build_auc_problem, build_mlc_problem, hamming_loss

TRACE_HEADER = "k,F,vdo,support,step,alpha,cg_iters,wall_ns"
LAMBDA1_SWEEP = [2.0**e for e in range(-6, 7)]


def _fmt(x):
    return format(float(x), ".17g")


def write_trace_csv(path, trace, timing=False):
    """Write iteration records as CSV (schema pinned by TRACE_HEADER)."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write(TRACE_HEADER + "\n")
        for r in trace:
            wall = r.wall_ns if timing else 0
            fh.write(f"{r.k},{_fmt(r.F)},{_fmt(r.vdo)},{r.support_size},{r.step_kind},"
                     f"{_fmt(r.alpha)},{r.cg_iters},{wall}\n")


def _config_json(config):
    d = asdict(config)
    return {k: d[k] for k in ("mu", "tau", "gamma", "c1", "c2", "max_iter", "vdo_rel_tol",
                              "vdo_change_tol", "vdo_abs_tol", "adaptive_tau",
                              "escape_zero_init", "rng_seed")}


def write_summary_json(path, task, dataset_path, solver_name, config, result, metric, wall_s):
    summary = {
        "task": task,
        "dataset": dataset_path,
        "solver": solver_name,
        "backend": backend_name(),
        "config": _config_json(config),
        "F_star": result.F_star,
        "vdo_final": result.vdo_final,
        "nne": int(np.count_nonzero(result.x_star)),
        "metric": metric,
        "time_s": wall_s,
        "iterations": result.iterations,
        "status": result.status,
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return summary


def _collect_overrides(args, mlc=False):
    over = {}
    for name in ("mu", "gamma", "c1", "c2"):
        val = getattr(args, name)
        if val is not None:
            over[name] = val
    if args.tau is not None:
        over["tau"] = args.tau
        over["adaptive_tau"] = None  # a fixed step size overrides the sweep
    if args.max_iter is not None:
        over["max_iter"] = args.max_iter
    if args.vdo_tol is not None:
        over["vdo_abs_tol"] = args.vdo_tol
    if args.vdo_rel_tol is not None:
        over["vdo_rel_tol"] = args.vdo_rel_tol
    if args.vdo_change_tol is not None:
        over["vdo_change_tol"] = args.vdo_change_tol
    return over


def _load_task_dataset(args):
    if args.task == "auc":
        ds = load_libsvm(args.data)
    else:
        n_labels = None
        try:
            with open(args.data + ".meta.json", "r", encoding="ascii") as fh:
                n_labels = json.load(fh).get("n_labels")
        except FileNotFoundError:
            pass
        ds = load_libsvm(args.data, multilabel=True, n_labels=n_labels)
    if args.scale:
        ds = Dataset(features=FeatureScaler.fit(ds.features).transform(ds.features),
                     labels=ds.labels)
    return ds


def cmd_gen(args):
    if args.task == "auc":
        ds = gen_example1(args.q, args.n, args.p, args.r, args.seed)
        meta = {"task": "auc", "q": args.q, "n": args.n, "p": args.p, "r": args.r,
                "seed": args.seed}
    else:
        ds = gen_example3(args.q, args.d, args.labels, args.seed)
        meta = {"task": "mlc", "q": args.q, "d": args.d, "n_labels": args.labels,
                "seed": args.seed}
    save_libsvm(ds, args.out)
    with open(args.out + ".meta.json", "w", encoding="ascii") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    print(f"wrote {ds.n_samples} samples, {ds.n_features} features -> {args.out}")
    return 0


def _build_problem(args, ds):
    overrides = _collect_overrides(args)
    if args.task == "auc":
        x_pos, x_neg = ds.split_classes()
        if x_pos.shape[0] == 0 or x_neg.shape[0] == 0:
            raise ValueError("AUC task needs at least one sample of each class")
        problem, config = build_auc_problem(x_pos, x_neg, **overrides)
    else:
        problem, config = build_mlc_problem(ds.features, ds.labels, args.lambda1, **overrides)
    return problem, config


def _metric(args, ds, result):
    if args.task == "auc":
        x_pos, x_neg = ds.split_classes()
        return auc_metric(x_pos, x_neg, result.x_star)
    return hamming_loss(ds.features, ds.labels, result.x_star)


def cmd_solve(args):
    ds = _load_task_dataset(args)
    problem, config = _build_problem(args, ds)
    run = solve_prox_gradient if args.solver == "pg" else solve
    t0 = time.perf_counter()
    result = run(problem, config)
    wall_s = time.perf_counter() - t0
    metric = _metric(args, ds, result)
    if args.trace:
        write_trace_csv(args.trace, result.trace, timing=args.timing)
    if args.summary:
        write_summary_json(args.summary, args.task, args.data, args.solver, config,
                           result, metric, wall_s)
    print(f"status={result.status} iterations={result.iterations} F={result.F_star:.6g} "
          f"vdo={result.vdo_final:.3g} nne={int(np.count_nonzero(result.x_star))} "
          f"metric={metric:.4f}")
    return 0 if result.status == "converged" else 3


def _bench_fold_auc(payload):
    (train_feat, train_lab, test_feat, test_lab, overrides) = payload
    scaler = FeatureScaler.fit(train_feat)
    tr = Dataset(features=scaler.transform(train_feat), labels=train_lab)
    te = Dataset(features=scaler.transform(test_feat), labels=test_lab)
    problem, config = build_auc_problem(*tr.split_classes(), **overrides)
    t0 = time.perf_counter()
    result = solve(problem, config)
    wall = time.perf_counter() - t0
    tr_metric = auc_metric(*tr.split_classes(), result.x_star)
    te_metric = auc_metric(*te.split_classes(), result.x_star)
    return tr_metric, te_metric, wall, int(np.count_nonzero(result.x_star)), result


def _bench_fold_mlc(payload):
    (train_feat, train_lab, test_feat, test_lab, lambda1, overrides) = payload
    problem, config = build_mlc_problem(train_feat, train_lab, lambda1, **overrides)
    t0 = time.perf_counter()
    result = solve(problem, config)
    wall = time.perf_counter() - t0
    tr_metric = hamming_loss(train_feat, train_lab, result.x_star)
    te_metric = hamming_loss(test_feat, test_lab, result.x_star)
    return tr_metric, te_metric, wall, int(np.count_nonzero(result.x_star)), result


BENCH_HEADER = "row,fold,lambda1,metric_train,metric_test,time_s,nne,iterations,status"


def _bench_row(fh, row, fold, lambda1, tr, te, wall, nne, iters, status):
    lam = "" if lambda1 is None else _fmt(lambda1)
    fh.write(f"{row},{fold},{lam},{_fmt(tr)},{_fmt(te)},{_fmt(wall)},{nne},{iters},{status}\n")


def _run_jobs(fn, payloads, jobs):
    if jobs <= 1:
        return [fn(p) for p in payloads]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, payloads))


def cmd_bench(args):
    ds = _load_task_dataset(args)
    overrides = _collect_overrides(args)
    if args.holdout is not None:
        splits = [holdout_split(ds, args.holdout, args.seed)]
    else:
        splits = kfold_splits(ds, args.folds, args.seed)
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write(BENCH_HEADER + "\n")
        if args.task == "auc":
            payloads = []
            for train, test in splits:
                tr, te = subset(ds, train), subset(ds, test)
                payloads.append((tr.features, tr.labels, te.features, te.labels, overrides))
            outs = _run_jobs(_bench_fold_auc, payloads, args.jobs)
            metrics = []
            for f, (tr_m, te_m, wall, nne, result) in enumerate(outs):
                _bench_row(fh, "fold", f, None, tr_m, te_m, wall, nne,
                           result.iterations, result.status)
                if args.trace_dir:
                    write_trace_csv(f"{args.trace_dir}/trace_fold{f}.csv", result.trace,
                                    timing=args.timing)
                metrics.append((tr_m, te_m, wall, nne))
            arr = np.array([m[:4] for m in metrics])
            mean = arr.mean(axis=0)
            _bench_row(fh, "mean", "", None, mean[0], mean[1], mean[2], mean[3], "", "")
            print(f"mean test metric over {len(splits)} folds: {mean[1]:.4f}")
        else:
            lambdas = LAMBDA1_SWEEP if args.sweep_lambda1 else [args.lambda1]
            train, test = splits[0] if args.holdout is not None else (None, None)
            if args.holdout is None:
                raise ValueError("mlc bench uses --holdout (fold CV not defined for the sweep)")
            tr, te = subset(ds, train), subset(ds, test)
            payloads = [(tr.features, tr.labels, te.features, te.labels, lam, overrides)
                        for lam in lambdas]
            outs = _run_jobs(_bench_fold_mlc, payloads, args.jobs)
            rows = []
            for lam, (tr_m, te_m, wall, nne, result) in zip(lambdas, outs):
                _bench_row(fh, "candidate", 0, lam, tr_m, te_m, wall, nne,
                           result.iterations, result.status)
                if args.trace_dir:
                    tag = format(lam, ".17g").replace(".", "p").replace("-", "m")
                    write_trace_csv(f"{args.trace_dir}/trace_lambda_{tag}.csv", result.trace,
                                    timing=args.timing)
                rows.append((tr_m, te_m, wall, nne, result))
            best = int(np.argmin([r[0] for r in rows]))  # select on the training metric
            tr_m, te_m, wall, nne, result = rows[best]
            _bench_row(fh, "selected", 0, lambdas[best], tr_m, te_m, wall, nne,
                       result.iterations, result.status)
            print(f"selected lambda1={lambdas[best]:g}: train={tr_m:.4f} test={te_m:.4f} nne={nne}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="sgsn",
                                     description="Sparse dual subspace Newton solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a simulated dataset")
    p_gen.add_argument("--task", choices=("auc", "mlc"), required=True)
    p_gen.add_argument("--q", type=int, required=True, help="number of samples")
    p_gen.add_argument("--n", type=int, help="features (auc)")
    p_gen.add_argument("--d", type=int, help="features incl. intercept (mlc)")
    p_gen.add_argument("--labels", type=int, help="number of labels (mlc)")
    p_gen.add_argument("--p", type=float, default=0.5, help="positive-class fraction (auc)")
    p_gen.add_argument("--r", type=float, default=0.0, help="label-flip fraction (auc)")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_gen)

    def add_solver_args(p):
        p.add_argument("--data", required=True)
        p.add_argument("--scale", action="store_true", help="map features onto [-1, 1]")
        p.add_argument("--mu", type=float)
        p.add_argument("--tau", type=float, help="fixed step size (disables the adaptive sweep)")
        p.add_argument("--gamma", type=float)
        p.add_argument("--c1", type=float)
        p.add_argument("--c2", type=float)
        p.add_argument("--lambda1", type=float, default=1.0, help="l1 weight (mlc)")
        p.add_argument("--max-iter", type=int, dest="max_iter")
        p.add_argument("--vdo-tol", type=float, dest="vdo_tol",
                       help="absolute dual-violation stopping target")
        p.add_argument("--vdo-rel-tol", type=float, dest="vdo_rel_tol")
        p.add_argument("--vdo-change-tol", type=float, dest="vdo_change_tol")
        p.add_argument("--timing", action="store_true",
                       help="record real per-iteration wall_ns in trace CSVs")

    p_solve = sub.add_parser("solve", help="solve one training problem")
    p_solve.add_argument("--task", choices=("auc", "mlc"), required=True)
    add_solver_args(p_solve)
    p_solve.add_argument("--solver", choices=("sgsn", "pg"), default="sgsn")
    p_solve.add_argument("--trace", help="write the iteration trace CSV here")
    p_solve.add_argument("--summary", help="write the run summary JSON here")
    p_solve.set_defaults(func=cmd_solve)

    p_bench = sub.add_parser("bench", help="cross-validated benchmark")
    p_bench.add_argument("--task", choices=("auc", "mlc"), required=True)
    add_solver_args(p_bench)
    p_bench.add_argument("--folds", type=int, default=5)
    p_bench.add_argument("--holdout", type=float,
                         help="train fraction for a single split instead of folds")
    p_bench.add_argument("--sweep-lambda1", action="store_true", dest="sweep_lambda1",
                         help="sweep lambda1 over 2^-6..2^6 and select on the training metric")
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.add_argument("--trace-dir", dest="trace_dir",
                         help="write one trace CSV per solve into this directory")
    p_bench.add_argument("--out", required=True)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
