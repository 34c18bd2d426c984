"""Command-line entry point.

Exit codes: 0 success, 1 invariant violation, 2 invalid parameters,
3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import (
    ExperimentSpec,
    emit,
    fit_rate,
    run_adversary_pipeline,
    run_rate_experiment,
    run_verification_suite,
)
from .reduction import build_reduction_plan, canonical_setting, lower_bound_queries, plan_to_json, verify_weight_identities
from .model import unit_class

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_PARAMS = 2
EXIT_IO = 3


def _common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", default=None, help="write results to this path")
    sub.add_argument("--format", default="csv", choices=["csv", "json"])
    sub.add_argument(
        "--tolerance-profile", default="default", choices=["default", "strict"]
    )


def _parse_grid(text: str) -> tuple[int, ...]:
    lo_s, _, hi_s = text.partition(":")
    lo, hi = int(lo_s), int(hi_s)
    if lo < 1 or hi < lo:
        raise ValueError("grid must be LO:HI with 1 <= LO <= HI")
    grid = []
    v = 1
    while v < lo:
        v *= 2
    while v <= hi:
        grid.append(v)
        v *= 2
    if len(grid) < 2:
        raise ValueError("grid spans fewer than two powers of two")
    return tuple(grid)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ivpbounds",
        description="verification suites, convergence-rate experiments, and "
        "query-bound calculators for k-fold integration problems",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("verify-spline", help="spline orthogonality/endpoint suite")
    p.add_argument("--r", type=int, required=True)
    p.add_argument(
        "--negative-control",
        action="store_true",
        help="self-test: run with a corrupted sign pattern (must fail)",
    )
    _common_flags(p)

    p = subs.add_parser("verify-reduction", help="collapse-identity suite")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--negative-control",
        action="store_true",
        help="self-test: run with corrupted weights (must fail)",
    )
    _common_flags(p)

    p = subs.add_parser("rates", help="empirical convergence-rate experiment")
    p.add_argument("--mode", choices=["det", "rand"], required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--grid", required=True, help="cost grid LO:HI, powers of two")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mc-samples", type=int, default=4)
    _common_flags(p)

    p = subs.add_parser("adversary", help="end-to-end mean-estimation pipeline")
    p.add_argument("--setting", choices=["rand", "quant"], required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cells", type=int, default=32)
    p.add_argument("--mc-samples", type=int, default=4)
    p.add_argument("--oracle", action="store_true", help="use exact integrals")
    _common_flags(p)

    p = subs.add_parser("bounds-calc", help="query lower-bound arguments")
    p.add_argument("--setting", choices=["rand", "quant"], required=True)
    p.add_argument("--kn", type=int, required=True)
    p.add_argument("--eps1", type=float, required=True)
    _common_flags(p)

    return parser


def _print_suite(report) -> None:
    for c in report.checks:
        status = "pass" if c.passed else "FAIL"
        print(f"[{status}] {c.name}: residual {c.residual:.3e} (tol {c.tolerance:.3e})")
    print("suite:", "pass" if report.passed else "FAIL")


def _run(args) -> int:
    if args.command == "verify-spline":
        spec = ExperimentSpec(
            kind="verify-spline", r=args.r, tolerance_profile=args.tolerance_profile
        )
        corrupt = "sign-pattern" if args.negative_control else None
        report = run_verification_suite(spec, corrupt=corrupt)
        _print_suite(report)
        if args.out:
            emit(report, args.out, args.format)
        return EXIT_OK if report.passed else EXIT_INVARIANT

    if args.command == "verify-reduction":
        spec = ExperimentSpec(
            kind="verify-reduction",
            k=args.k,
            n=args.n,
            r=args.r,
            seed=args.seed,
            tolerance_profile=args.tolerance_profile,
        )
        corrupt = "weights" if args.negative_control else None
        report = run_verification_suite(spec, corrupt=corrupt)
        _print_suite(report)
        if args.out:
            if args.format == "json" and not args.negative_control:
                plan = build_reduction_plan(args.k, args.n, unit_class(args.r))
                payload = plan_to_json(plan, verify_weight_identities(plan))
                payload["suite"] = report.to_json_dict()
                try:
                    with open(args.out, "w") as fh:
                        json.dump(payload, fh, indent=2, sort_keys=True)
                        fh.write("\n")
                except OSError as exc:
                    raise OSError(f"cannot write {args.out}: {exc}") from exc
            else:
                emit(report, args.out, args.format)
        return EXIT_OK if report.passed else EXIT_INVARIANT

    if args.command == "rates":
        spec = ExperimentSpec(
            kind="rates",
            mode=args.mode,
            r=args.r,
            k=args.k,
            cost_grid=_parse_grid(args.grid),
            trials=args.trials,
            seed=args.seed,
            mc_samples=args.mc_samples,
            tolerance_profile=args.tolerance_profile,
        )
        table = run_rate_experiment(spec)
        column = "rms" if args.mode == "rand" else "max"
        fit = fit_rate(table, column)
        print(table.to_csv_string(), end="")
        print(
            f"fitted {column} exponent: {fit.exponent:.4f} "
            f"(intercept {fit.intercept:.4f}, residual {fit.residual:.2e}, "
            f"rows {fit.rows_used})"
        )
        if table.skipped_budgets:
            print("infeasible budgets skipped:", table.skipped_budgets)
        if args.out:
            emit(table, args.out, args.format)
        return EXIT_OK

    if args.command == "adversary":
        spec = ExperimentSpec(
            kind="adversary",
            setting=args.setting,
            k=args.k,
            r=args.r,
            n=args.n,
            trials=args.trials,
            seed=args.seed,
            cells=args.cells,
            mc_samples=args.mc_samples,
            tolerance_profile=args.tolerance_profile,
        )
        report = run_adversary_pipeline(spec, oracle_mode=args.oracle)
        print(f"setting: {report.setting} ({report.note})")
        print(f"observed RMS mean error: {report.observed_rms:.6e}")
        print(f"measured per-integral RMS error: {report.epsilon_in_rms:.6e}")
        print(f"inflated error bound eps1: {report.epsilon_out:.6e}")
        print(f"observed / eps1 ratio: {report.ratio:.4f}")
        print(f"query lower-bound argument at eps1: {report.bound_argument}")
        if args.out:
            emit(report, args.out, args.format)
        return EXIT_OK

    if args.command == "bounds-calc":
        value = lower_bound_queries(args.setting, args.kn, args.eps1)
        setting = canonical_setting(args.setting)
        formula = "min(kn, ceil(1/eps1))" if setting == "quantum" else "min(kn, ceil((1/eps1)^2))"
        print(f"{setting} bound argument {formula} = {value}")
        if args.out:
            payload = {
                "schema_version": 1,
                "setting": setting,
                "kn": args.kn,
                "eps1": args.eps1,
                "bound_argument": value,
            }
            try:
                with open(args.out, "w") as fh:
                    json.dump(payload, fh, indent=2, sort_keys=True)
                    fh.write("\n")
            except OSError as exc:
                raise OSError(f"cannot write {args.out}: {exc}") from exc
        return EXIT_OK

    raise AssertionError(f"unhandled command {args.command}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except (ValueError, TypeError) as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
