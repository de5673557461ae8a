"""Command-line front end.

Subcommands: ``test`` (two matrices in, decision out), ``power``
(Monte-Carlo sweep from a JSON spec), ``calibrate`` (type-I rate at the
null), ``concentration`` (null tail bounds), ``bench`` (runtime scaling).

Exit codes: 0 success, 1 usage/configuration error, 2 data error; ``test``
exits 10 instead of 0 when it rejects and ``--exit-code-decision`` is set.
All randomness is driven by ``--seed``; repeated invocations with the same
arguments produce byte-identical statistical output regardless of
``--threads``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import __version__
from .backends import active_backend, available_backends, set_backend
from .baselines import median_heuristic_test, split_test
from .errors import (
    DataFormatError,
    DegenerateDataError,
    InvalidConfigError,
    InvalidInputError,
    MMDFuseError,
)
from .experiments import (
    SETTINGS,
    TEST_IDS,
    SweepSpec,
    level_calibration,
    null_concentration_report,
    power_sweep,
    runtime_scaling,
)
from .fuse import VARIANT_NORMALIZED, VARIANT_UNNORMALIZED
from .io import read_matrix
from .kernels import FAMILIES
from .permutation import TestConfig, run_test

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_REJECT = 10

POWER_CSV_HEADER = "test,grid_value,reps,rejections,rate,ci_lo,ci_hi"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(name):
    def parse(text):
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer, got {text!r}")
        if value < 1:
            raise argparse.ArgumentTypeError(f"{name} must be >= 1, got {value}")
        return value

    return parse


def _seed_value(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"seed must be >= 0, got {value}")
    return value


def _open_unit_float(name):
    def parse(text):
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}")
        if not 0.0 < value < 1.0:
            raise argparse.ArgumentTypeError(f"{name} must be in (0, 1), got {value}")
        return value

    return parse


def _lambda_value(text):
    if text == "auto":
        return "auto"
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"lambda must be 'auto' or a number, got {text!r}")
    if not value > 0:
        raise argparse.ArgumentTypeError(f"lambda must be positive, got {value}")
    return value


def _families(text):
    names = tuple(t.strip() for t in text.split(",") if t.strip())
    unknown = set(names) - set(FAMILIES)
    if not names or unknown:
        raise argparse.ArgumentTypeError(
            f"families must be a comma list drawn from {FAMILIES}, got {text!r}"
        )
    return names


def _int_list(name):
    def parse(text):
        try:
            values = [int(t) for t in text.split(",") if t.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a comma list of integers")
        if not values:
            raise argparse.ArgumentTypeError(f"{name} must be nonempty")
        return values

    return parse


def _default_threads() -> int:
    env = os.environ.get("FUSE_THREADS", "").strip()
    if env.isdigit() and int(env) >= 1:
        return int(env)
    return 1


def _build_parser() -> _Parser:
    parser = _Parser(prog="mmdfuse", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, b_default=2000):
        p.add_argument("--alpha", type=_open_unit_float("alpha"), default=0.05)
        p.add_argument("--b", type=_positive_int("b"), default=b_default,
                       help="number of sampled permutations")
        p.add_argument("--seed", type=_seed_value, default=0)
        p.add_argument("--output", default=None, help="write results here instead of stdout")
        p.add_argument("--threads", type=_positive_int("threads"), default=None,
                       help="worker threads (default: FUSE_THREADS env or 1)")

    t = sub.add_parser("test", help="two-sample test on two matrix files")
    t.add_argument("--x", required=True, help="first sample, one observation per line")
    t.add_argument("--y", required=True, help="second sample")
    t.add_argument("--test", dest="test_id", choices=TEST_IDS, default="fuse-n")
    add_common(t)
    t.add_argument("--lambda", dest="lam", type=_lambda_value, default="auto")
    t.add_argument("--families", type=_families, default=("gaussian", "laplace"))
    t.add_argument("--grid-size", type=_positive_int("grid-size"), default=10)
    t.add_argument("--standardize", action="store_true")
    t.add_argument("--normalizer-denominator", choices=("paper", "full"), default="paper")
    t.add_argument("--format", choices=("json", "csv"), default="json")
    t.add_argument("--verbose", action="store_true",
                   help="include the full permuted-statistic vector")
    t.add_argument("--exit-code-decision", action="store_true",
                   help="exit 10 on rejection instead of 0")

    p = sub.add_parser("power", help="Monte-Carlo power sweep from a JSON spec")
    p.add_argument("--config", required=True, help="JSON sweep specification")
    p.add_argument("--output", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=_positive_int("threads"), default=None)

    c = sub.add_parser("calibrate", help="type-I error rate at the null")
    c.add_argument("--setting", choices=SETTINGS, default="standard_normal")
    c.add_argument("--dim", type=_positive_int("dim"), default=1)
    c.add_argument("--n", type=_positive_int("n"), default=100)
    c.add_argument("--reps", type=_positive_int("reps"), default=200)
    c.add_argument("--tests", default=",".join(TEST_IDS),
                   help="comma list of test ids")
    add_common(c, b_default=500)
    c.add_argument("--format", choices=("csv", "json"), default="csv")

    k = sub.add_parser("concentration", help="null tail bounds for the fused statistics")
    k.add_argument("--n", type=_positive_int("n"), default=50)
    k.add_argument("--m", type=_positive_int("m"), default=50)
    k.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="temperature; default: half the admissible limit")
    k.add_argument("--t", type=float, default=None,
                   help="lower-tail temperature; default: same as lambda")
    k.add_argument("--delta", type=_open_unit_float("delta"), default=0.1)
    k.add_argument("--reps", type=_positive_int("reps"), default=2000)
    k.add_argument("--dim", type=_positive_int("dim"), default=1)
    k.add_argument("--seed", type=_seed_value, default=0)
    k.add_argument("--output", default=None)
    k.add_argument("--format", choices=("json", "csv"), default="json")

    bench = sub.add_parser("bench", help="runtime scaling of the fused test")
    bench.add_argument("--sizes", type=_int_list("sizes"), default=[250, 500, 1000])
    bench.add_argument("--dim", type=_positive_int("dim"), default=10)
    bench.add_argument("--kernels", type=_positive_int("kernels"), default=10)
    bench.add_argument("--b", type=_positive_int("b"), default=200)
    bench.add_argument("--repeats", type=_positive_int("repeats"), default=3)
    bench.add_argument("--seed", type=_seed_value, default=0)
    bench.add_argument("--backend", choices=("auto",) + tuple(available_backends()),
                       default="auto")
    bench.add_argument("--output", default=None)
    bench.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w") as handle:
            handle.write(text)


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2) + "\n"


def _result_payload(test_id, result, verbose: bool) -> dict:
    payload = {
        "test": test_id,
        "statistic": float(result.statistic),
        "threshold": float(result.threshold),
        "p_proxy": float(result.p_proxy),
        "reject": bool(result.reject),
        "config": result.config,
    }
    if verbose:
        payload["permuted_stats"] = [float(v) for v in result.permuted_stats]
    return payload


def _curve_csv(curve) -> str:
    lines = [POWER_CSV_HEADER]
    for cell in curve.cells:
        lines.append(
            f"{cell.test},{cell.grid_value!r},{cell.reps},{cell.rejections},"
            f"{cell.rate!r},{cell.ci_lo!r},{cell.ci_hi!r}"
        )
    return "\n".join(lines) + "\n"


def _curve_json(curve) -> str:
    return _json_text(
        {
            "spec": dataclasses.asdict(curve.spec),
            "cells": [dataclasses.asdict(cell) for cell in curve.cells],
        }
    )


def _cmd_test(args) -> int:
    x = read_matrix(args.x)
    y = read_matrix(args.y)
    if args.test_id == "mmd-median":
        result = median_heuristic_test(x, y, alpha=args.alpha, b=args.b, seed=args.seed)
    elif args.test_id == "mmd-split":
        result = split_test(x, y, alpha=args.alpha, b=args.b, seed=args.seed)
    else:
        variant = VARIANT_NORMALIZED if args.test_id == "fuse-n" else VARIANT_UNNORMALIZED
        config = TestConfig(
            alpha=args.alpha,
            b=args.b,
            seed=args.seed,
            variant=variant,
            lam=args.lam,
            families=args.families,
            grid_size=args.grid_size,
            standardize=args.standardize,
            normalizer_denominator=args.normalizer_denominator,
        )
        result = run_test(x, y, config)

    if args.format == "json":
        text = _json_text(_result_payload(args.test_id, result, args.verbose))
    else:
        lines = ["statistic,threshold,p_proxy,reject"]
        lines.append(
            f"{result.statistic!r},{result.threshold!r},{result.p_proxy!r},"
            f"{str(result.reject).lower()}"
        )
        text = "\n".join(lines) + "\n"
    _emit(text, args.output)
    if args.exit_code_decision and result.reject:
        return EXIT_REJECT
    return EXIT_OK


def _load_sweep_spec(path, threads: int) -> SweepSpec:
    try:
        with open(path) as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise DataFormatError(f"config: cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"config: {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise DataFormatError(f"config: {path} must hold a JSON object")
    known = {f.name for f in dataclasses.fields(SweepSpec)}
    unknown = set(raw) - known
    if unknown:
        raise InvalidConfigError(
            f"config: unknown field(s) {sorted(unknown)}; expected a subset of {sorted(known)}"
        )
    for key in ("grid", "tests"):
        if key in raw and isinstance(raw[key], list):
            raw[key] = tuple(raw[key])
    raw.setdefault("threads", threads)
    try:
        return SweepSpec(**raw)
    except TypeError as exc:
        raise InvalidConfigError(f"config: {exc}") from None


def _cmd_power(args) -> int:
    threads = args.threads if args.threads is not None else _default_threads()
    spec = _load_sweep_spec(args.config, threads)
    curve = power_sweep(spec)
    text = _curve_csv(curve) if args.format == "csv" else _curve_json(curve)
    _emit(text, args.output)
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    threads = args.threads if args.threads is not None else _default_threads()
    tests = tuple(t.strip() for t in args.tests.split(",") if t.strip())
    curve = level_calibration(
        args.setting,
        reps=args.reps,
        tests=tests,
        alpha=args.alpha,
        b=args.b,
        seed=args.seed,
        n=args.n,
        dim=args.dim,
        threads=threads,
    )
    text = _curve_csv(curve) if args.format == "csv" else _curve_json(curve)
    _emit(text, args.output)
    return EXIT_OK


def _cmd_concentration(args) -> int:
    if args.lam is None:
        from .experiments import fuse1_lambda_limit, fusen_lambda_limit

        args.lam = 0.5 * min(fuse1_lambda_limit(args.n), fusen_lambda_limit(args.n))
    if args.t is None:
        args.t = args.lam
    report = null_concentration_report(
        args.n, args.m, args.lam, args.t, args.delta, args.reps,
        seed=args.seed, dim=args.dim,
    )
    payload = dataclasses.asdict(report)
    payload["passed"] = report.passed
    if args.format == "json":
        text = _json_text(payload)
    else:
        keys = list(payload)
        values = [repr(payload[k]) if isinstance(payload[k], float) else str(payload[k]) for k in keys]
        text = ",".join(keys) + "\n" + ",".join(values) + "\n"
    _emit(text, args.output)
    return EXIT_OK


def _cmd_bench(args) -> int:
    if args.backend != "auto":
        set_backend(args.backend)
    report = runtime_scaling(
        args.sizes, dim=args.dim, kernels=args.kernels, b=args.b,
        seed=args.seed, repeats=args.repeats,
    )
    if args.format == "json":
        payload = dataclasses.asdict(report)
        payload["backend"] = active_backend().name
        text = _json_text(payload)
    else:
        lines = ["n,seconds"]
        lines.extend(f"{e.n},{e.seconds!r}" for e in report.entries)
        lines.append(f"# backend={active_backend().name} loglog_slope={report.loglog_slope!r}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.output)
    return EXIT_OK


_COMMANDS = {
    "test": _cmd_test,
    "power": _cmd_power,
    "calibrate": _cmd_calibrate,
    "concentration": _cmd_concentration,
    "bench": _cmd_bench,
}


def parse_and_dispatch(argv=None) -> int:
    """Parse arguments, run the requested subcommand, return the exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except InvalidConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (DataFormatError, DegenerateDataError, InvalidInputError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA
    except MMDFuseError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
