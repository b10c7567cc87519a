"""Batch command-line front end.

Subcommands: `sample` draws a seeded sample to CSV, `entropy` runs the
nearest-neighbour estimator on a CSV, `test` evaluates a goodness-of-fit
statistic (optionally against a precomputed critical-value table), and
`experiment` runs a full Monte Carlo experiment from a JSON config.

Exit codes: 0 success, 2 usage or validation error, 3 data error
(duplicate points, degenerate covariance).  stdout carries JSON
records; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from . import mc
from .distributions import SpdMatrix, gaussian, pearson2, student
from .errors import (
    DomainError,
    DuplicatePointsError,
    ExperimentError,
    NotPositiveDefiniteError,
)
from .gof import pearson_statistic, student_statistic
from .knn import renyi_estimate, shannon_estimate
from .sampler import RngStream, read_csv, sample, write_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE) -> None:
        super().__init__(message)
        self.code = code


def _param(text: str) -> float:
    if text.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'inf', got {text!r}") from None


def _parse_vector(text: str, m: int) -> np.ndarray:
    vals = [float(v) for v in text.split(",")]
    if len(vals) != m:
        raise CliError(f"--loc needs {m} comma-separated values, got {len(vals)}")
    return np.asarray(vals)


def _parse_matrix(text: str, m: int) -> np.ndarray:
    rows = [[float(v) for v in row.split(",")] for row in text.split(";")]
    if len(rows) != m or any(len(r) != m for r in rows):
        raise CliError(f"--scale needs an {m}x{m} matrix as 'r1c1,r1c2;r2c1,...'")
    return np.asarray(rows)


def _build_spec(args):
    m = args.dim
    loc = _parse_vector(args.loc, m) if args.loc else np.zeros(m)
    scale = SpdMatrix(_parse_matrix(args.scale, m)) if args.scale else SpdMatrix.identity(m)
    if args.family == "gaussian":
        return gaussian(loc, scale)
    if args.family == "student":
        if args.nu is None:
            raise CliError("--nu is required for --family student")
        return student(loc, scale, args.nu)
    if args.eta is None:
        raise CliError("--eta is required for --family pearson2")
    return pearson2(loc, scale, args.eta)


def cmd_sample(args) -> int:
    spec = _build_spec(args)
    s = sample(spec, args.n, RngStream(args.seed, args.stream))
    resolved = {
        "family": args.family, "dim": args.dim,
        "nu": None if args.nu is None else mc._param_str(args.nu),
        "eta": None if args.eta is None else mc._param_str(args.eta),
        "n": args.n, "seed": args.seed, "stream": args.stream,
        "loc": args.loc, "scale": args.scale,
    }
    metadata = [
        f"renyigof {__version__}",
        "config " + json.dumps(resolved, sort_keys=True, default=str),
        f"master_seed {args.seed}",
    ]
    write_csv(s, args.output, metadata=metadata)
    print(json.dumps({"written": str(args.output), "n": s.n, "dim": s.dim,
                      "seed": args.seed, "stream": args.stream}))
    return EXIT_OK


def cmd_entropy(args) -> int:
    s = read_csv(args.data)
    if args.q == 1.0:
        est = shannon_estimate(s, args.k)
    else:
        est = renyi_estimate(s, args.k, args.q)
    print(json.dumps({"value": est.value, "q": est.q, "k": est.k, "n": est.n, "dim": est.dim}))
    return EXIT_OK


def cmd_test(args) -> int:
    if args.alpha and not args.critical_table:
        raise CliError(
            "--alpha needs --critical-table; run `renyigof experiment` on the "
            "null configuration to produce one"
        )
    s = read_csv(args.data)
    if args.family == "student":
        if args.nu0 is None:
            raise CliError("--nu0 is required for --family student")
        stat = student_statistic(s, args.nu0, args.k)
    else:
        if args.eta0 is None:
            raise CliError("--eta0 is required for --family pearson2")
        stat = pearson_statistic(s, args.eta0, args.k)
    record = {
        "W": stat.value,
        "family": args.family,
        "null_param": mc._param_str(stat.null_param),
        "q": stat.q,
        "k": stat.k,
        "n": stat.n,
        "m": stat.dim,
        "l2_condition_ok": stat.l2_ok,
    }
    print(json.dumps(record))
    if args.critical_table:
        alphas = args.alpha or [0.05]
        for alpha in alphas:
            table = mc.read_critical_values(args.critical_table, alpha)
            crit = table.get(stat.n)
            if crit is None:
                raise CliError(
                    f"critical table {args.critical_table} has no row for N={stat.n}"
                )
            print(json.dumps({"alpha": alpha, "critical": crit, "reject": stat.value > crit}))
    return EXIT_OK


def cmd_experiment(args) -> int:
    path = Path(args.config)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise CliError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise CliError(f"config is not valid JSON: {exc}") from None
    power_reference = data.pop("power_reference", None)
    try:
        config = mc.ExperimentConfig.from_dict(data)
    except ExperimentError as exc:
        raise CliError(str(exc)) from None

    critical_by_n = None
    if power_reference is not None:
        ref = Path(power_reference)
        if not ref.is_absolute():
            ref = path.parent / ref
        critical_by_n = mc.read_critical_values(ref, 0.05)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = mc.run_experiment(config, workers=args.workers)

    summary_path = out_dir / "summary.csv"
    mc.write_summary_csv(result, summary_path, critical_by_n=critical_by_n)
    written = [str(summary_path)]
    for entry in result.per_n:
        hist_path = out_dir / f"hist_{entry.n}.csv"
        mc.write_histogram_csv(result, entry.n, hist_path)
        written.append(str(hist_path))
    if config.include_replicates or args.replicates_json:
        replicates_path = out_dir / "replicates.json"
        replicates_path.write_text(mc.result_to_json(result, include_replicates=True) + "\n")
        written.append(str(replicates_path))
    print(json.dumps({"written": written, "config_hash": config.config_hash()}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="renyigof",
        description="Nearest-neighbour Renyi entropy estimation and "
        "maximum-entropy goodness-of-fit tests.",
    )
    parser.add_argument("--version", action="version", version=f"renyigof {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw a seeded sample to CSV")
    p.add_argument("--family", choices=["gaussian", "student", "pearson2"], required=True)
    p.add_argument("--nu", type=_param, help="Student degrees of freedom (> 2 or inf)")
    p.add_argument("--eta", type=_param, help="Pearson II shape (> 0 or inf)")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--loc", help="location as comma-separated values (default 0)")
    p.add_argument("--scale", help="scale matrix rows separated by ';' (default identity)")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("entropy", help="estimate entropy of a CSV sample")
    p.add_argument("data")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--q", type=float, required=True, help="Renyi order; 1 selects Shannon")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("test", help="goodness-of-fit statistic for a CSV sample")
    p.add_argument("data")
    p.add_argument("--family", choices=["student", "pearson2"], required=True)
    p.add_argument("--nu0", type=_param, help="Student null parameter (> 2 or inf)")
    p.add_argument("--eta0", type=_param, help="Pearson II null parameter (> 0 or inf)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--critical-table", help="summary CSV from a null-configuration experiment")
    p.add_argument("--alpha", type=float, action="append",
                   help="significance level(s) to decide at (needs --critical-table)")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("experiment", help="run a Monte Carlo experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: all CPUs); results identical for any count")
    p.add_argument("--replicates-json", action="store_true",
                   help="also write full replicate arrays as JSON")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (DuplicatePointsError, NotPositiveDefiniteError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DomainError, ExperimentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
