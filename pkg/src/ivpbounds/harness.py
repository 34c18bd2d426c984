"""Verification suites, convergence experiments, and the adversary pipeline.

Every experiment is a pure function of its spec: the seed feeds counter-based
generators, trials are aggregated in index order, and serialization uses
fixed repr-based formatting, so identical specs produce byte-identical
output.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np
from numpy.random import Generator, Philox

from . import bspline, reduction
from .bspline import (
    BumpFamily,
    SignPattern,
    assemble_weighted,
    build_bump_family,
    build_perfect_bspline,
    build_scaled_bump,
    bump_kfold_integral,
    sign_pattern,
)
from .model import PureTimeRHS, SmoothnessClass, unit_class
from .reduction import (
    MeanInstance,
    ReductionPlan,
    WeightVector,
    assemble_adversarial_rhs,
    build_reduction_plan,
    canonical_setting,
    exact_integrals,
    lower_bound_queries,
    recover_mean,
    solve_weights,
    verify_weight_identities,
)
from .solvers import RANDOMIZED, SolverConfig, randomized_cv_solver, deterministic_kfold_solver

SCHEMA_VERSION = 1

TOLERANCE_PROFILES = {
    "default": {
        "moments": 1e-10,
        "spline_endpoints": 1e-9,
        "bump_endpoints": 1e-9,
        "membership_slack": 1e-9,
        "weight_identities": 1e-8,  # times sum |c_j|
        "roundtrip": 1e-8,  # times max(1, |mean|)
        "telescoping": 1e-8,
    },
    "strict": {
        "moments": 1e-11,
        "spline_endpoints": 1e-10,
        "bump_endpoints": 1e-10,
        "membership_slack": 1e-10,
        "weight_identities": 1e-9,
        "roundtrip": 1e-9,
        "telescoping": 1e-9,
    },
}

KINDS = ("verify-spline", "verify-reduction", "rates", "adversary", "bounds-calc")


@dataclass(frozen=True)
class ExperimentSpec:
    """Declarative description of one run; serializable and reproducible."""

    kind: str
    r: int = 1
    k: int = 1
    n: int = 8
    setting: str = "rand"
    mode: str = "rand"  # rates: det | rand
    cost_grid: tuple[int, ...] = ()
    trials: int = 100
    seed: int = 0
    mc_samples: int = 4
    cells: int = 32
    eps1: float = 0.1
    kn: int = 1
    out: str | None = None
    fmt: str = "csv"
    tolerance_profile: str = "default"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(b <= a for a, b in zip(self.cost_grid, self.cost_grid[1:])):
            raise ValueError("cost grid must be strictly increasing")
        if self.tolerance_profile not in TOLERANCE_PROFILES:
            raise ValueError(f"unknown tolerance profile {self.tolerance_profile!r}")
        if self.fmt not in ("csv", "json"):
            raise ValueError(f"unknown format {self.fmt!r}")

    @property
    def tolerances(self) -> dict:
        return TOLERANCE_PROFILES[self.tolerance_profile]

    def to_json(self) -> str:
        payload = {"schema_version": SCHEMA_VERSION, **asdict(self)}
        payload["cost_grid"] = list(self.cost_grid)
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        payload = json.loads(text)
        payload.pop("schema_version", None)
        payload["cost_grid"] = tuple(payload.get("cost_grid", ()))
        return cls(**payload)


# ----------------------------------------------------------------------
# convergence tables and rate fitting
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class RateRow:
    cost: int
    error_mean: float
    error_rms: float
    error_max: float
    trials: int


@dataclass
class ConvergenceTable:
    rows: list[RateRow] = field(default_factory=list)
    skipped_budgets: list[int] = field(default_factory=list)
    per_trial: dict[int, list[float]] = field(default_factory=dict)

    def add(self, cost: int, errors: Sequence[float]) -> None:
        errors = [float(e) for e in errors]
        arr = np.abs(np.asarray(errors))
        row = RateRow(
            int(cost),
            float(arr.mean()),
            float(np.sqrt(np.mean(arr**2))),
            float(arr.max()),
            len(errors),
        )
        if self.rows and cost <= self.rows[-1].cost:
            raise ValueError("rows must be added in increasing cost order")
        if self.rows and row.trials != self.rows[-1].trials:
            raise ValueError("trial count must be constant across rows")
        self.rows.append(row)
        self.per_trial[int(cost)] = errors

    def column(self, name: str) -> np.ndarray:
        key = {"mean": "error_mean", "rms": "error_rms", "max": "error_max"}[name]
        return np.array([getattr(r, key) for r in self.rows])

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.rows], dtype=float)

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["cost", "error_mean", "error_rms", "error_max", "trials"])
        for r in self.rows:
            writer.writerow(
                [r.cost, repr(r.error_mean), repr(r.error_rms), repr(r.error_max), r.trials]
            )
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "rows": [asdict(r) for r in self.rows],
            "skipped_budgets": list(self.skipped_budgets),
        }


@dataclass(frozen=True)
class RateFit:
    """Least-squares slope of log error against log cost, sign-flipped."""

    exponent: float
    intercept: float
    residual: float
    rows_used: int


ERROR_FLOOR = 1e-13


def fit_rate(table: ConvergenceTable, column: str = "rms") -> RateFit:
    errors = table.column(column)
    costs = table.costs
    usable = errors > ERROR_FLOOR
    if int(usable.sum()) < 3:
        raise ValueError("need at least 3 rows with errors above the floating floor")
    x = np.log(costs[usable])
    y = np.log(errors[usable])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return RateFit(float(-slope), float(intercept), resid, int(usable.sum()))


# ----------------------------------------------------------------------
# verification suites
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


@dataclass
class SuiteReport:
    kind: str
    params: dict
    checks: list[CheckResult] = field(default_factory=list)

    def add(self, name: str, residual: float, tolerance: float) -> None:
        self.checks.append(CheckResult(name, float(residual), float(tolerance)))

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "params": self.params,
            "passed": self.passed,
            "checks": [
                {
                    "name": c.name,
                    "residual": c.residual,
                    "tolerance": c.tolerance,
                    "passed": c.passed,
                }
                for c in self.checks
            ],
        }

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["check", "residual", "tolerance", "passed"])
        for c in self.checks:
            writer.writerow([c.name, repr(c.residual), repr(c.tolerance), c.passed])
        return buf.getvalue()


def corrupted_sign_pattern(r: int) -> SignPattern:
    """Negative-control fixture: one knot nudged off its Chebyshev position."""
    good = sign_pattern(r)
    knots = list(good.knots)
    knots[0] += 0.05
    return SignPattern(tuple(knots), good.leading_sign)


def corrupted_weights(k: int) -> WeightVector:
    """Negative-control fixture: first weight perturbed."""
    good = solve_weights(k)
    weights = list(good.weights)
    weights[0] += 1e-3 * max(1.0, abs(weights[0]))
    return WeightVector(k, tuple(weights), good.condition_estimate)


def spline_suite(
    spec: ExperimentSpec, pattern_override: SignPattern | None = None
) -> SuiteReport:
    """Orthogonality, endpoint, membership, and derivative-pattern checks."""
    r = spec.r
    tol = spec.tolerances
    report = SuiteReport("verify-spline", {"r": r})
    pattern = pattern_override if pattern_override is not None else sign_pattern(r)
    report.add(
        "sign pattern moments vanish up to degree r",
        pattern.max_moment_residual(r),
        tol["moments"],
    )

    spline = build_perfect_bspline(r + 1)
    worst = max(
        max(abs(spline.body.derivative(j)(-1.0)), abs(spline.body.derivative(j)(1.0)))
        for j in range(r + 1)
    )
    report.add("spline derivatives vanish at both endpoints", worst, tol["spline_endpoints"])

    cls = unit_class(r)
    bump = build_scaled_bump(0.0, 1.0, cls)
    worst_end = max(
        max(abs(bump.body.derivative(j)(0.0)), abs(bump.body.derivative(j)(1.0)))
        / max(1.0, cls.derivative_bounds[j])
        for j in range(r + 1)
    )
    report.add("bump derivatives vanish at cell endpoints", worst_end, tol["bump_endpoints"])

    grid = np.linspace(0.0, 1.0, 20_001)
    worst_excess = max(
        float(np.max(np.abs(bump.body.derivative(j)(grid)))) - cls.derivative_bounds[j]
        for j in range(r + 1)
    )
    report.add(
        "bump derivatives stay inside the class bounds",
        max(0.0, worst_excess),
        tol["membership_slack"],
    )

    mids = 0.5 * (pattern.boundaries[:-1] + pattern.boundaries[1:])
    top = spline.body.derivative(r + 1)(mids)
    report.add(
        "top derivative reproduces the sign pattern at midpoints",
        float(np.max(np.abs(top - sign_pattern(r).signs))),
        tol["moments"],
    )

    if r == 1:
        xs = np.linspace(-1.0, 1.0, 2001)
        fixture = np.abs(xs) - 1.0
        report.add(
            "degree-1 spline equals |x| - 1",
            float(np.max(np.abs(build_perfect_bspline(1).body(xs) - fixture))),
            tol["moments"],
        )
    return report


def reduction_suite(
    spec: ExperimentSpec, weights_override: WeightVector | None = None
) -> SuiteReport:
    """Collapse identities, telescoping, and mean-recovery roundtrips."""
    k, n, r = spec.k, spec.n, spec.r
    tol = spec.tolerances
    report = SuiteReport("verify-reduction", {"k": k, "n": n, "r": r})
    plan = build_reduction_plan(k, n, unit_class(r))
    wv = plan.weights if weights_override is None else weights_override

    ident = verify_weight_identities(plan, weights=weights_override)
    report.add(
        "collapse identities over all shifted cells",
        ident.max_residual,
        tol["weight_identities"] * ident.scale,
    )

    samples = np.linspace(-0.3, 1.3, k + 3)
    poly_res = max(abs(wv.poly_value(x) - 1.0) for x in samples)
    report.add(
        "weight polynomial is identically one",
        poly_res,
        tol["weight_identities"] * max(1.0, wv.abs_sum),
    )

    rng = Generator(Philox(key=spec.seed))
    worst_round = 0.0
    worst_tele = 0.0
    hbar = plan.shift.mesh
    a, b = plan.smoothness.interval
    v1 = plan.family.integral_constant(1)
    tele_gain = hbar ** (r + 1) * (b - a) ** (k - 1) * v1 / math.factorial(k - 1)
    c = np.asarray(wv.weights)
    for _ in range(20):
        lam = rng.uniform(-1.0, 1.0, k * n)
        inst = MeanInstance(tuple(lam))
        integrals = exact_integrals(plan, inst)
        est = float(
            (k * n) ** r * plan.constant * (c @ integrals)
        )
        worst_round = max(
            worst_round, abs(est - inst.mean) / max(1.0, abs(inst.mean))
        )
        s_direct = float(c @ integrals)
        s_pred = tele_gain * float(lam.sum())
        worst_tele = max(
            worst_tele, abs(s_direct - s_pred) / max(abs(s_pred), abs(tele_gain))
        )
    report.add("mean-recovery roundtrip on random instances", worst_round, tol["roundtrip"])
    report.add("weighted integrals telescope to the lambda sum", worst_tele, tol["telescoping"])
    return report


def run_verification_suite(
    spec: ExperimentSpec, corrupt: str | None = None
) -> SuiteReport:
    """Dispatch to the spline or reduction suite, optionally with a corrupted fixture.

    ``corrupt`` is the negative-control hook: "sign-pattern" feeds a knot
    nudged off its Chebyshev position, "weights" a perturbed weight vector.
    Both must make the suite fail; the acceptance tests rely on that.
    """
    if spec.kind == "verify-spline":
        override = corrupted_sign_pattern(spec.r) if corrupt == "sign-pattern" else None
        if corrupt not in (None, "sign-pattern"):
            raise ValueError(f"unknown corruption {corrupt!r} for verify-spline")
        return spline_suite(spec, pattern_override=override)
    if spec.kind == "verify-reduction":
        override = corrupted_weights(spec.k) if corrupt == "weights" else None
        if corrupt not in (None, "weights"):
            raise ValueError(f"unknown corruption {corrupt!r} for verify-reduction")
        return reduction_suite(spec, weights_override=override)
    raise ValueError(f"spec kind {spec.kind!r} is not a verification suite")


# ----------------------------------------------------------------------
# rate experiments
# ----------------------------------------------------------------------

# Frozen data of the default test integrand: three bumps on half the class
# budget plus a degree-r ramp on the other half.  The ramp keeps the leading
# deterministic error term from telescoping away on compactly supported
# integrands (for k = 1 it would cancel to a boundary term that vanishes),
# and the fixed +/-1 weights have a nonzero sum for the same reason.
RATE_RHS_BUMPS = 3
RATE_RHS_WEIGHTS = (1.0, -1.0, 1.0)
RATE_RHS_BUMP_SHARE = 0.25
RATE_RHS_RAMP_SHARE = 0.75


def default_rate_integrand(r: int, k: int):
    """Fixed in-class integrand with a closed-form k-fold integral.

    Returns ``(rhs, truth)`` where ``truth`` is the exact k-fold integral
    over the unit interval, assembled from the bump closed forms and the
    iterated power rule for the ramp.
    """
    cls = unit_class(r)
    fam = build_bump_family(cls.scaled(RATE_RHS_BUMP_SHARE), RATE_RHS_BUMPS)
    lam = np.asarray(RATE_RHS_WEIGHTS)
    body = assemble_weighted(fam, lam)
    beta = RATE_RHS_RAMP_SHARE / math.factorial(r)
    ramp = np.zeros(r + 1)
    ramp[r] = beta
    body = body.add_polynomial(ramp, center=cls.a)
    truth = float(
        sum(l * bump_kfold_integral(fam, i, k) for i, l in enumerate(lam))
        + beta * math.factorial(r) / math.factorial(r + k)
    )
    return PureTimeRHS(body, cls), truth


def run_rate_experiment(spec: ExperimentSpec) -> ConvergenceTable:
    """Measure endpoint error against the exact integral over a cost grid.

    Deterministic runs are repeated once (they cannot vary); randomized runs
    use ``trials`` seeds derived as ``seed xor trial``.  Budgets too small
    for a single cell are recorded in ``skipped_budgets``.
    """
    if spec.kind != "rates":
        raise ValueError("spec kind must be 'rates'")
    mode = spec.mode
    if mode not in ("det", "rand"):
        raise ValueError("mode must be det or rand")
    if not spec.cost_grid:
        raise ValueError("rates experiment needs a cost grid")
    r, k = spec.r, spec.k
    rhs, truth = default_rate_integrand(r, k)
    local_degree = r - 1
    per_cell = r + (spec.mc_samples if mode == "rand" else 0)
    table = ConvergenceTable()
    for budget in spec.cost_grid:
        cells = budget // per_cell
        if cells < 1:
            table.skipped_budgets.append(int(budget))
            continue
        if mode == "det":
            config = SolverConfig(cells=cells, local_degree=local_degree)
            result = deterministic_kfold_solver(rhs, k, config)
            table.add(result.cost, [result.endpoint_value - truth])
        else:
            errors = []
            cost = 0
            for t in range(spec.trials):
                config = SolverConfig(
                    cells=cells,
                    local_degree=local_degree,
                    mc_samples_per_cell=spec.mc_samples,
                    seed=spec.seed ^ t,
                    mode=RANDOMIZED,
                )
                result = randomized_cv_solver(rhs, k, config)
                errors.append(result.endpoint_value - truth)
                cost = result.cost
            table.add(cost, errors)
    if not table.rows:
        raise ValueError("every budget in the grid was infeasible")
    return table


# ----------------------------------------------------------------------
# adversary pipeline
# ----------------------------------------------------------------------


@dataclass
class AdversaryReport:
    """End-to-end mean-estimation record over all trials."""

    setting: str
    k: int
    n: int
    r: int
    trials: int
    observed_rms: float
    epsilon_in_rms: float
    epsilon_out: float
    inflation_factor: float
    bound_argument: int
    oracle_mode: bool
    note: str
    ratio: float

    def to_json_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, **asdict(self)}

    def to_csv_string(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        fields = list(asdict(self).items())
        writer.writerow([k for k, _ in fields])
        writer.writerow([v if isinstance(v, (int, str, bool)) else repr(v) for _, v in fields])
        return buf.getvalue()


def run_adversary_pipeline(
    spec: ExperimentSpec, oracle_mode: bool = False
) -> AdversaryReport:
    """Hide random signs, integrate, recover the mean, compare with bookkeeping.

    Per trial: draw ``lambda in {-1, +1}^kn`` (the extreme points, which is
    where mean estimation is hard), build the k shifted right-hand sides,
    approximate each k-fold integral with the randomized solver, and collapse
    the approximations back to a mean estimate.  ``epsilon_in`` is the
    measured RMS per-integral error, ``epsilon_out`` its inflated image, and
    the reported query bound uses the setting's formula at that accuracy.
    ``oracle_mode`` swaps the solver for the exact closed forms (roundtrip
    sanity).  In the quantum setting the classical pipeline still runs; only
    the reported bound changes, so it is labeled analysis-only.
    """
    if spec.kind != "adversary":
        raise ValueError("spec kind must be 'adversary'")
    setting = canonical_setting(spec.setting)
    k, n, r = spec.k, spec.n, spec.r
    plan = build_reduction_plan(k, n, unit_class(r))
    kn = k * n
    mean_errors = []
    integral_errors = []
    for t in range(spec.trials):
        rng = Generator(Philox(key=spec.seed ^ t))
        lam = 2.0 * rng.integers(0, 2, kn) - 1.0
        inst = MeanInstance(tuple(lam))
        truth = exact_integrals(plan, inst)
        if oracle_mode:
            approximations = truth
        else:
            approximations = np.empty(k)
            for j in range(k):
                rhs = assemble_adversarial_rhs(plan.shift, inst, j)
                config = SolverConfig(
                    cells=spec.cells,
                    local_degree=r - 1,
                    mc_samples_per_cell=spec.mc_samples,
                    seed=(spec.seed ^ t) + ((j + 1) << 48),
                    mode=RANDOMIZED,
                )
                approximations[j] = randomized_cv_solver(rhs, k, config).endpoint_value
        integral_errors.extend(np.abs(approximations - truth))
        rec = recover_mean(plan, approximations)
        mean_errors.append(rec.estimate - inst.mean)
    observed = float(np.sqrt(np.mean(np.square(mean_errors))))
    eps_in = float(np.sqrt(np.mean(np.square(integral_errors))))
    eps_out = float(plan.inflation_factor() * eps_in)
    if eps_out > 0:
        bound = lower_bound_queries(setting, kn, eps_out)
        ratio = observed / eps_out
    else:  # oracle mode: no integration error at all
        bound = kn
        ratio = 0.0
    note = (
        "analysis only: classical pipeline, quantum-setting bound formula"
        if setting == "quantum"
        else "randomized-setting bound formula"
    )
    return AdversaryReport(
        setting,
        k,
        n,
        r,
        spec.trials,
        observed,
        eps_in,
        eps_out,
        plan.inflation_factor(),
        bound,
        oracle_mode,
        note,
        ratio,
    )


# ----------------------------------------------------------------------
# output
# ----------------------------------------------------------------------


def emit(results, path, fmt: str = "csv") -> None:
    """Write a table/report to ``path`` as CSV or schema-versioned JSON.

    Output is byte-identical for identical inputs.  I/O problems are
    re-raised with the path attached so the CLI can map them to exit code 3.
    """
    try:
        if fmt == "csv":
            text = results.to_csv_string()
        elif fmt == "json":
            text = json.dumps(results.to_json_dict(), indent=2, sort_keys=True) + "\n"
        else:
            raise ValueError(f"unknown format {fmt!r}")
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
