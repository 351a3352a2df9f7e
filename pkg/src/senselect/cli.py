"""Command-line frontend: dataset generation, selection runs, evaluation, sweeps.

Every command is deterministic given its flags (timing columns excepted).
A plain ``key=value`` config file may supply flag defaults via ``--config``;
explicit flags always win.  Exit codes: 0 success, 2 usage error, 3 data
error, 4 numerical error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from math import comb, nan
from pathlib import Path

import numpy as np

from . import admm
from .estimation import aopt_objective, reconstruct, reconstruction_error, wls_estimator
from .exceptions import (
    BadFoldCountError,
    ConvergenceWarning,
    DegenerateNoiseError,
    DimensionMismatchError,
    DuplicateSensorError,
    EmptyMaskError,
    EnumerationTooLargeError,
    InconsistentGridError,
    InfeasibleBudgetError,
    NumericalFailureError,
    ParseError,
    RankOutOfRangeError,
    SensorIndexError,
    SingularFIMError,
    UnderSampledError,
    ZeroDataError,
)
from .greedy import GreedyConfig, greedy_select
from .ingest import dataset_from_matrix, load_grid, make_folds, save_grid, to_snapshots
from .oracle import exhaustive_best
from .rom import build_noise_model, fit_rom
from .synthetic import SyntheticSpec, generate
from .validation import as_sensor_indices, check_ranks

METHODS = ("greedy-wn", "greedy-cn", "admm-wn", "admm-cn", "admm-cn-wo-norm", "oracle")
WHITE_METHODS = frozenset({"greedy-wn", "admm-wn"})
NOISE_KINDS = ("correlated", "white")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

USAGE_ERRORS = (
    InfeasibleBudgetError,
    RankOutOfRangeError,
    BadFoldCountError,
    EnumerationTooLargeError,
)
DATA_ERRORS = (
    ParseError,
    InconsistentGridError,
    EmptyMaskError,
    ZeroDataError,
    DimensionMismatchError,
    SensorIndexError,
    DuplicateSensorError,
    UnderSampledError,
)
NUMERIC_ERRORS = (NumericalFailureError, SingularFIMError, DegenerateNoiseError)

BENCH_COLUMNS = (
    "status",
    "seed",
    "method",
    "n",
    "m",
    "p",
    "objective",
    "recon_error",
    "wall_time_s",
    "iterations",
    "time_per_iter_s",
)
SUMMARY_COLUMNS = (
    "method",
    "n",
    "m",
    "p",
    "trials",
    "failures",
    "objective_mean",
    "recon_error_mean",
    "wall_time_s_mean",
    "time_per_iter_s_mean",
)


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name) is None:
            flag = "--" + name.replace("_", "-")
            raise ValueError(f"{flag} is required (flag or config file)")


def _int_list(text: str) -> list[int]:
    values = [int(tok) for tok in text.split(",") if tok.strip()]
    if not values:
        raise argparse.ArgumentTypeError("expected a comma-separated integer list")
    return values


def _read_config(path) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ParseError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        values[key.strip()] = value.strip()
    return values


def _apply_config(parser, subparser, args, argv):
    """Inject config-file values as subcommand defaults, then re-parse.

    Re-parsing keeps the precedence flags > config > built-in defaults
    without tracking which flags were explicitly given.
    """
    values = _read_config(args.config)
    overrides = {}
    for action in subparser._actions:
        key = action.dest.replace("_", "-")
        if key not in values or action.dest == "config":
            continue
        raw = values[key]
        if isinstance(action, argparse._StoreTrueAction):
            overrides[action.dest] = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            overrides[action.dest] = action.type(raw)
        else:
            overrides[action.dest] = raw
    unknown = set(values) - {
        action.dest.replace("_", "-") for action in subparser._actions
    }
    if unknown:
        raise ValueError(
            f"config keys not recognized by '{args.command}': {sorted(unknown)}"
        )
    subparser.set_defaults(**overrides)
    return parser.parse_args(argv)


def _add_solver_flags(sub) -> None:
    sub.add_argument("--gamma", type=float, default=1.0, help="initial ADMM step size")
    sub.add_argument("--eta", type=float, default=0.99, help="step-size decay factor")
    sub.add_argument(
        "--decay-period", type=int, default=5000,
        help="iterations between step-size decays",
    )
    sub.add_argument(
        "--eps-conv", type=float, default=None,
        help="convergence tolerance (default: 1e-6 * sqrt(n * r1))",
    )
    sub.add_argument("--max-iters", type=int, default=200_000, help="iteration cap")
    sub.add_argument(
        "--polish-threshold", type=float, default=1e-4,
        help="row-norm cutoff for active sensors",
    )


def _solver_settings(args) -> dict:
    return {
        "gamma_init": args.gamma,
        "eta": args.eta,
        "gamma_decay_period": args.decay_period,
        "eps_conv": args.eps_conv,
        "max_iters": args.max_iters,
        "polish_threshold": args.polish_threshold,
    }


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="senselect",
        description="Sparse sensor selection for field reconstruction "
        "under correlated measurement noise.",
    )
    subparsers = parser.add_subparsers(dest="command")
    subs = {}

    sub = subparsers.add_parser("generate", help="write a synthetic snapshot dataset")
    sub.add_argument("--config", help="key=value file supplying flag defaults")
    sub.add_argument("--n", type=int, help="spatial dimension")
    sub.add_argument("--m", type=int, help="snapshot count")
    sub.add_argument("--seed", type=int, default=0, help="random seed")
    sub.add_argument(
        "--spectrum", default="inv-sqrt",
        help='"inv-sqrt" or comma-separated singular values',
    )
    sub.add_argument("--out", help="output path")
    sub.add_argument(
        "--format", choices=("ssel1", "csv"), default="ssel1", help="output format"
    )
    sub.set_defaults(func=cmd_generate)
    subs["generate"] = sub

    sub = subparsers.add_parser("select", help="run one selection method on a dataset")
    sub.add_argument("--config", help="key=value file supplying flag defaults")
    sub.add_argument("--data", help="input dataset (binary or CSV)")
    sub.add_argument("--method", help=f"one of {', '.join(METHODS)}")
    sub.add_argument("--p", type=int, help="number of sensors")
    sub.add_argument("--r1", type=int, default=10, help="signal modes")
    sub.add_argument("--r2", type=int, default=40, help="signal + noise modes")
    sub.add_argument(
        "--center", action="store_true", help="subtract each row's temporal mean"
    )
    sub.add_argument(
        "--holdout", type=float, default=0.0,
        help="fraction of trailing columns held out for test error",
    )
    sub.add_argument(
        "--out-prefix", default="select",
        help="prefix for .sensors.txt, .meta.json, and .trace.csv outputs",
    )
    _add_solver_flags(sub)
    sub.set_defaults(func=cmd_select)
    subs["select"] = sub

    sub = subparsers.add_parser("bench", help="sweep methods over seeds and sizes")
    sub.add_argument("--config", help="key=value file supplying flag defaults")
    sub.add_argument(
        "--methods", default="greedy-wn,greedy-cn,admm-wn,admm-cn,admm-cn-wo-norm",
        help="comma-separated method list",
    )
    sub.add_argument("--seeds", type=int, default=20, help="number of trial seeds")
    sub.add_argument("--seed-base", type=int, default=0, help="first seed value")
    sub.add_argument(
        "--p-list", type=_int_list, default=[30], help="sensor budgets to sweep"
    )
    sub.add_argument(
        "--n-list", type=_int_list, default=[2000], help="spatial dimensions to sweep"
    )
    sub.add_argument("--m", type=int, default=60, help="snapshot count")
    sub.add_argument("--r1", type=int, default=10, help="signal modes")
    sub.add_argument("--r2", type=int, default=40, help="signal + noise modes")
    sub.add_argument("--rows-out", default="bench_rows.csv", help="per-trial CSV path")
    sub.add_argument(
        "--summary-out", default="bench_summary.csv", help="per-cell mean CSV path"
    )
    sub.add_argument("--jobs", type=int, default=1, help="parallel trial workers")
    _add_solver_flags(sub)
    sub.set_defaults(func=cmd_bench)
    subs["bench"] = sub

    sub = subparsers.add_parser("eval", help="evaluate a sensor file on a dataset")
    sub.add_argument("--config", help="key=value file supplying flag defaults")
    sub.add_argument("--data", help="input dataset")
    sub.add_argument("--sensors", help="sensor index file, one index per line")
    sub.add_argument("--r1", type=int, default=10, help="signal modes")
    sub.add_argument("--r2", type=int, default=40, help="signal + noise modes")
    sub.add_argument(
        "--noise", choices=NOISE_KINDS, default="correlated",
        help="noise model used for the estimation gain",
    )
    sub.add_argument(
        "--center", action="store_true", help="subtract each row's temporal mean"
    )
    sub.add_argument(
        "--folds", type=int, default=0,
        help="cross-validation fold count (0 = single fit on all columns)",
    )
    sub.add_argument("--out", help="output CSV path (default: stdout)")
    sub.set_defaults(func=cmd_eval)
    subs["eval"] = sub

    return parser, subs


def cmd_generate(args) -> int:
    _require(args, "n", "m", "out")
    if args.spectrum == "inv-sqrt":
        spectrum = args.spectrum
    else:
        try:
            spectrum = [float(tok) for tok in args.spectrum.split(",")]
        except ValueError as exc:
            raise ValueError(f"bad --spectrum value {args.spectrum!r}: {exc}") from exc
    data = generate(SyntheticSpec(n=args.n, m=args.m, spectrum=spectrum, seed=args.seed))
    save_grid(dataset_from_matrix(data), args.out, format=args.format)
    print(f"wrote {args.n} x {args.m} snapshot matrix to {args.out}")
    return EXIT_OK


def _run_method(method, rom, noise, p, settings):
    """Dispatch one selection method.

    Returns (sensors, iterations, converged, trace); trace is the ADMM
    iteration history or None.
    """
    if method == "greedy-wn":
        sensors, _ = greedy_select(rom, None, GreedyConfig(p=p, noise_mode="white"))
        return sensors, p, True, None
    if method == "greedy-cn":
        sensors, _ = greedy_select(rom, noise, GreedyConfig(p=p, noise_mode="correlated"))
        return sensors, p, True, None
    if method == "oracle":
        sensors, _ = exhaustive_best(rom, noise, p)
        return sensors, comb(rom.n, p), True, None
    if method == "admm-wn":
        problem = admm.white_noise_problem(rom, budget=p)
    elif method == "admm-cn":
        problem = admm.normalize(rom, noise, budget=p)
    elif method == "admm-cn-wo-norm":
        problem = admm.normalize(rom, noise, budget=p, weighting=False)
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    state, sensors = admm.solve(problem, admm.SolverConfig(**settings))
    return sensors, state.iters, state.converged, state.trace


def cmd_select(args) -> int:
    _require(args, "data", "method", "p")
    if args.method not in METHODS:
        raise ValueError(f"unknown method {args.method!r}; choose from {METHODS}")
    if not 0.0 <= args.holdout < 1.0:
        raise ValueError("--holdout must lie in [0, 1)")
    dataset = load_grid(args.data)
    snapshots, _ = to_snapshots(dataset, center=args.center)
    n, m = snapshots.shape
    m_test = int(round(args.holdout * m))
    if m_test and m - m_test < 2:
        raise ValueError("--holdout leaves fewer than 2 training columns")
    train = snapshots[:, : m - m_test]
    test = snapshots[:, m - m_test:]
    check_ranks(args.r1, args.r2, min(n, m - m_test))
    rom = fit_rom(train, args.r1, args.r2)
    # White-noise methods stay usable on noiseless (exactly low-rank) data,
    # where no noise model exists; correlated methods need one.
    try:
        noise = build_noise_model(rom)
    except DegenerateNoiseError:
        if args.method not in WHITE_METHODS:
            raise
        noise = None
    settings = _solver_settings(args)
    start = time.perf_counter()
    sensors, iterations, converged, trace = _run_method(
        args.method, rom, noise, args.p, settings
    )
    wall = time.perf_counter() - start
    noise_for_gain = None if args.method in WHITE_METHODS else noise
    estimator = wls_estimator(rom, noise_for_gain, sensors)
    _, field = reconstruct(estimator, rom, train)
    recon_train = reconstruction_error(train, field)
    recon_test = None
    if m_test:
        _, field = reconstruct(estimator, rom, test)
        recon_test = reconstruction_error(test, field)
    objective = aopt_objective(rom, noise, sensors) if noise is not None else None
    objective_self = aopt_objective(rom, noise_for_gain, sensors)

    prefix = str(args.out_prefix)
    sensors_path = Path(prefix + ".sensors.txt")
    sensors_path.write_text("".join(f"{idx}\n" for idx in sensors))
    trace_path = None
    if trace is not None:
        trace_path = Path(prefix + ".trace.csv")
        with trace_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(admm.TRACE_COLUMNS)
            for row in trace:
                writer.writerow(
                    [int(row[0]), row[1], row[2], row[3], int(row[4])]
                )
    meta = {
        "method": args.method,
        "data": str(args.data),
        "n": n,
        "m": m,
        "r1": args.r1,
        "r2": args.r2,
        "p": args.p,
        "center": bool(args.center),
        "holdout_columns": m_test,
        "solver": settings if args.method.startswith("admm") else None,
        "objective": objective_self,
        "objective_correlated": objective,
        "recon_train": recon_train,
        "recon_test": recon_test,
        "iterations": iterations,
        "converged": bool(converged),
        "wall_time_s": wall,
        "sensors_file": str(sensors_path),
        "trace_file": str(trace_path) if trace_path else None,
    }
    Path(prefix + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    print(f"method={args.method} n={n} m={m} p={args.p}")
    print(f"sensors: {' '.join(str(idx) for idx in sensors)}")
    parts = [f"objective={objective_self:.10g}", f"recon_train={recon_train:.10g}"]
    if recon_test is not None:
        parts.append(f"recon_test={recon_test:.10g}")
    print(" ".join(parts))
    if not converged:
        print(
            "warning: solver hit the iteration cap before the tolerance; "
            "results use the last iterate"
        )
    return EXIT_OK


def _bench_trial(task: dict) -> list[dict]:
    """All (p, method) rows for one (n, seed) cell; failures become rows."""
    rows = []
    base = {"seed": task["seed"], "n": task["n"], "m": task["m"]}
    try:
        data = generate(
            SyntheticSpec(n=task["n"], m=task["m"], spectrum="inv-sqrt", seed=task["seed"])
        )
        rom = fit_rom(data, task["r1"], task["r2"])
        noise = build_noise_model(rom)
    except Exception as exc:
        return [
            {
                **base, "status": f"error:{type(exc).__name__}", "method": method,
                "p": p, "objective": nan, "recon_error": nan, "wall_time_s": nan,
                "iterations": 0, "time_per_iter_s": nan,
            }
            for p in task["p_list"]
            for method in task["methods"]
        ]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        for p in task["p_list"]:
            for method in task["methods"]:
                row = {**base, "method": method, "p": p}
                try:
                    start = time.perf_counter()
                    sensors, iterations, converged, _ = _run_method(
                        method, rom, noise, p, task["solver"]
                    )
                    wall = time.perf_counter() - start
                    noise_for_gain = None if method in WHITE_METHODS else noise
                    estimator = wls_estimator(rom, noise_for_gain, sensors)
                    _, field = reconstruct(estimator, rom, data)
                    row.update(
                        status="ok" if converged else "did-not-converge",
                        objective=aopt_objective(rom, noise, sensors),
                        recon_error=reconstruction_error(data, field),
                        wall_time_s=wall,
                        iterations=iterations,
                        time_per_iter_s=(
                            wall / iterations if method.startswith("admm") else nan
                        ),
                    )
                except Exception as exc:
                    row.update(
                        status=f"error:{type(exc).__name__}", objective=nan,
                        recon_error=nan, wall_time_s=nan, iterations=0,
                        time_per_iter_s=nan,
                    )
                rows.append(row)
    return rows


def _summarize(rows: list[dict]) -> list[dict]:
    cells: dict[tuple, dict] = {}
    for row in rows:
        key = (row["method"], row["n"], row["m"], row["p"])
        cell = cells.setdefault(key, {"rows": [], "failures": 0})
        if row["status"].startswith("error"):
            cell["failures"] += 1
        else:
            cell["rows"].append(row)

    def mean_of(items, field):
        values = [v for item in items if np.isfinite(v := item[field])]
        return float(np.mean(values)) if values else nan

    summary = []
    for key in sorted(cells, key=lambda k: (k[0], k[1], k[2], k[3])):
        cell = cells[key]
        ok = cell["rows"]
        summary.append(
            {
                "method": key[0], "n": key[1], "m": key[2], "p": key[3],
                "trials": len(ok) + cell["failures"],
                "failures": cell["failures"],
                "objective_mean": mean_of(ok, "objective"),
                "recon_error_mean": mean_of(ok, "recon_error"),
                "wall_time_s_mean": mean_of(ok, "wall_time_s"),
                "time_per_iter_s_mean": mean_of(ok, "time_per_iter_s"),
            }
        )
    return summary


def _write_csv(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        writer.writerows(rows)


def cmd_bench(args) -> int:
    methods = [tok.strip() for tok in args.methods.split(",") if tok.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise ValueError(f"unknown methods {bad}; choose from {METHODS}")
    if args.seeds < 1:
        raise ValueError("--seeds must be >= 1")
    if args.jobs < 1:
        raise ValueError("--jobs must be >= 1")
    solver = _solver_settings(args)
    tasks = [
        {
            "n": n, "m": args.m, "seed": seed, "r1": args.r1, "r2": args.r2,
            "p_list": args.p_list, "methods": methods, "solver": solver,
        }
        for n in args.n_list
        for seed in range(args.seed_base, args.seed_base + args.seeds)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_bench_trial, tasks))
    else:
        results = [_bench_trial(task) for task in tasks]
    rows = [row for trial in results for row in trial]
    _write_csv(args.rows_out, BENCH_COLUMNS, rows)
    summary = _summarize(rows)
    _write_csv(args.summary_out, SUMMARY_COLUMNS, summary)
    failures = sum(1 for row in rows if row["status"].startswith("error"))
    print(f"wrote {len(rows)} rows to {args.rows_out} ({failures} failed)")
    print(f"wrote {len(summary)} summary cells to {args.summary_out}")
    return EXIT_OK


def _read_sensor_file(path) -> np.ndarray:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        values = [int(line.strip()) for line in lines if line.strip()]
    except ValueError as exc:
        raise ParseError(f"{path}: expected one integer per line: {exc}") from exc
    if not values:
        raise ParseError(f"{path}: no sensor indices found")
    return np.array(values, dtype=np.int64)


def _eval_fold(snapshots, train_cols, test_cols, sensors, args):
    train = snapshots[:, train_cols]
    check_ranks(args.r1, args.r2, min(snapshots.shape[0], train.shape[1]))
    rom = fit_rom(train, args.r1, args.r2)
    noise = build_noise_model(rom) if args.noise == "correlated" else None
    estimator = wls_estimator(rom, noise, sensors)
    objective = aopt_objective(rom, noise, sensors)
    _, field = reconstruct(estimator, rom, train)
    recon_train = reconstruction_error(train, field)
    recon_test = nan
    if test_cols is not None and len(test_cols):
        test = snapshots[:, test_cols]
        _, field = reconstruct(estimator, rom, test)
        recon_test = reconstruction_error(test, field)
    return objective, recon_train, recon_test


def cmd_eval(args) -> int:
    _require(args, "data", "sensors")
    if args.folds == 1 or args.folds < 0:
        raise ValueError("--folds must be 0 (no split) or >= 2")
    dataset = load_grid(args.data)
    snapshots, _ = to_snapshots(dataset, center=args.center)
    n, m = snapshots.shape
    sensors = as_sensor_indices(_read_sensor_file(args.sensors), n)
    rows = []
    if args.folds >= 2:
        split = make_folds(m, args.folds)
        for index, (train_cols, test_cols) in enumerate(split.folds):
            objective, recon_train, recon_test = _eval_fold(
                snapshots, train_cols, test_cols, sensors, args
            )
            rows.append(
                {
                    "fold": str(index), "m_train": len(train_cols),
                    "m_test": len(test_cols), "objective": objective,
                    "recon_train": recon_train, "recon_test": recon_test,
                }
            )
        rows.append(
            {
                "fold": "mean",
                "m_train": float(np.mean([r["m_train"] for r in rows])),
                "m_test": float(np.mean([r["m_test"] for r in rows])),
                "objective": float(np.mean([r["objective"] for r in rows])),
                "recon_train": float(np.mean([r["recon_train"] for r in rows])),
                "recon_test": float(np.mean([r["recon_test"] for r in rows])),
            }
        )
    else:
        objective, recon_train, recon_test = _eval_fold(
            snapshots, np.arange(m), None, sensors, args
        )
        rows.append(
            {
                "fold": "all", "m_train": m, "m_test": 0, "objective": objective,
                "recon_train": recon_train, "recon_test": recon_test,
            }
        )
    columns = ("fold", "m_train", "m_test", "objective", "recon_train", "recon_test")
    if args.out:
        _write_csv(args.out, columns, rows)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        writer = csv.DictWriter(sys.stdout, fieldnames=list(columns))
        writer.writeheader()
        writer.writerows(rows)
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        if getattr(args, "config", None):
            args = _apply_config(parser, subs[args.command], args, argv)
        return args.func(args)
    except USAGE_ERRORS as exc:
        return _fail(exc, EXIT_USAGE)
    except DATA_ERRORS as exc:
        return _fail(exc, EXIT_DATA)
    except NUMERIC_ERRORS as exc:
        return _fail(exc, EXIT_NUMERIC)
    except OSError as exc:
        return _fail(exc, EXIT_DATA)
    except ValueError as exc:
        return _fail(exc, EXIT_USAGE)


def _fail(exc: Exception, code: int) -> int:
    print(f"error: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
