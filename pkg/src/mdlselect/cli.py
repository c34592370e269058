"""Command-line front end: fit, fit-additive, simulate, bench, oracle.

All structured output is JSON with a stable field order. Indices in output
are 1-based. Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .dataset import load_csv
from .errors import InputError, MdlSelectError, NumericalError
from .pipeline import (
    ALL_METHODS,
    METHOD_LINEAR,
    FitReport,
    exhaustive_oracle,
    fit_additive,
    fit_linear,
    fit_robust,
)
from .simlab import (
    SimConfig,
    generate_additive,
    generate_linear,
    run_bench,
    save_csv,
)
from .splines import SplineBasisSpec, build_additive_design

GRID_POINTS = 100


def _write_json(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _fit_json(report: FitReport, names, seed: int) -> dict:
    return {
        "method": report.method,
        "selected": {
            "indices": list(report.selected.indices),
            "names": [names[j - 1] for j in report.selected.indices],
        },
        "intercept": float(report.intercept),
        "coefficients": [float(v) for v in report.coefficients],
        "criterion": float(report.criterion),
        "criterion_curve": [[int(s), float(v)] for s, v in report.criterion_curve],
        "m": int(report.screen_size),
        "path_length": int(report.path_length),
        "seed": int(seed),
        "warnings": list(report.warnings),
        "timings_ms": {k: float(v) for k, v in report.timings_ms.items()},
    }


def cmd_fit(args) -> int:
    d = load_csv(args.input, args.response)
    fit = fit_robust if args.method == "robust-mdl" else fit_linear
    report = fit(d, m=args.screen_size)
    _write_json(_fit_json(report, d.names, args.seed), args.output)
    return 0


def cmd_fit_additive(args) -> int:
    d = load_csv(args.input, args.response)
    spec = SplineBasisSpec(degree=args.degree, basis_dim=args.basis_dim)
    report = fit_additive(d, m=args.screen_size, spec=spec, robust=args.robust)
    out = _fit_json(report, d.names, args.seed)
    out["basis_dim"] = int(report.basis_dim)
    out["degree"] = int(args.degree)

    groups = []
    if len(report.selected):
        design = build_additive_design(d, report.selected, spec)
        d_n = spec.basis_dim
        for g, covariate in enumerate(design.group_index):
            a, b = design.domain_bounds[g]
            grid = np.linspace(a, b, GRID_POINTS)
            coef = report.coefficients[g * d_n : (g + 1) * d_n]
            values = design.evaluate_group(g, grid) @ coef
            groups.append(
                {
                    "covariate": int(covariate),
                    "name": d.names[covariate - 1],
                    "domain": [float(a), float(b)],
                    "grid": [float(v) for v in grid],
                    "values": [float(v) for v in values],
                }
            )
    out["groups"] = groups
    _write_json(out, args.output)
    return 0


def _load_config(path: str) -> SimConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config file {path} is not valid JSON: {exc}") from None
    return SimConfig.from_dict(obj)


def cmd_bench(args) -> int:
    cfg = _load_config(args.config)
    report = run_bench(cfg)
    _write_json(report.to_dict(), args.output)
    if args.dump_reps:
        with open(args.dump_reps, "w", encoding="utf-8") as fh:
            fh.write("rep,method,fn,fp,f1,mse,seconds\n")
            for row in report.rows:
                fh.write(
                    f"{row['rep']},{row['method']},{row['fn']},{row['fp']},"
                    f"{row['f1']!r},{row['mse']!r},{row['seconds']!r}\n"
                )
    if args.strict and report.failures:
        print(
            f"error: {len(report.failures)} replication(s) failed",
            file=sys.stderr,
        )
        return 3
    return 0


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    if cfg.design == "linear":
        dataset, beta = generate_linear(cfg, args.rep)
        truth = {
            "design": "linear",
            "support": list(range(1, cfg.d + 1)),
            "beta": [float(v) for v in beta],
        }
    else:
        dataset, t = generate_additive(cfg, args.rep)
        truth = {
            "design": "additive",
            "support": list(t.support),
            "signal": [float(v) for v in t.signal],
        }
    save_csv(dataset, args.output)
    if args.truth_output:
        _write_json(truth, args.truth_output)
    return 0


def cmd_oracle(args) -> int:
    d = load_csv(args.input, args.response)
    spec = SplineBasisSpec(degree=args.degree, basis_dim=args.basis_dim)
    report = exhaustive_oracle(d, args.max_size, args.criterion, spec=spec)
    out = _fit_json(report, d.names, 0)
    out["n_candidates"] = int(report.n_candidates)
    _write_json(out, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mdlselect",
        description=(
            "Model selection by two-part code length for high-dimensional "
            "linear, robust, and additive regression."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p):
        p.add_argument("--input", required=True, help="input CSV file")
        p.add_argument("--response", required=True, help="response column name")
        p.add_argument("--output", default=None, help="output JSON path (default stdout)")
        p.add_argument("--seed", type=int, default=0, help="seed recorded in the output")

    p_fit = sub.add_parser("fit", help="select a sparse linear model")
    add_io(p_fit)
    p_fit.add_argument(
        "--method", choices=["mdl", "robust-mdl"], default="mdl",
        help="selection criterion (Gaussian or Laplace code)",
    )
    p_fit.add_argument(
        "--screen-size", type=int, default=None,
        help="screening survivors m (default min(n-1, p))",
    )
    p_fit.set_defaults(func=cmd_fit)

    p_add = sub.add_parser("fit-additive", help="select sparse additive components")
    add_io(p_add)
    p_add.add_argument("--basis-dim", type=int, default=9, help="spline coefficients per component")
    p_add.add_argument("--degree", type=int, default=3, help="spline degree")
    p_add.add_argument("--robust", action="store_true", help="use the Laplace code and LAD refits")
    p_add.add_argument(
        "--screen-size", type=int, default=None,
        help="screening survivors m (default floor(n/basis_dim) - 1)",
    )
    p_add.set_defaults(func=cmd_fit_additive)

    p_sim = sub.add_parser("simulate", help="write one replication's dataset as CSV")
    p_sim.add_argument("--config", required=True, help="scenario JSON file")
    p_sim.add_argument("--rep", type=int, default=0, help="replication index")
    p_sim.add_argument("--output", required=True, help="output CSV path")
    p_sim.add_argument("--truth-output", default=None, help="optional truth JSON path")
    p_sim.set_defaults(func=cmd_simulate)

    p_bench = sub.add_parser("bench", help="run a benchmark scenario")
    p_bench.add_argument("--config", required=True, help="scenario JSON file")
    p_bench.add_argument("--output", default=None, help="report JSON path (default stdout)")
    p_bench.add_argument("--dump-reps", default=None, help="per-replication CSV path")
    p_bench.add_argument(
        "--strict", action="store_true",
        help="exit nonzero if any replication failed",
    )
    p_bench.set_defaults(func=cmd_bench)

    p_oracle = sub.add_parser("oracle", help="exhaustive best-subset check")
    add_io(p_oracle)
    p_oracle.add_argument("--max-size", type=int, required=True, help="largest subset size")
    p_oracle.add_argument(
        "--criterion", choices=list(ALL_METHODS), default=METHOD_LINEAR,
        help="criterion to minimize",
    )
    p_oracle.add_argument("--basis-dim", type=int, default=9)
    p_oracle.add_argument("--degree", type=int, default=3)
    p_oracle.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except MdlSelectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
