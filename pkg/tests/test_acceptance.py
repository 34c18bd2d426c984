"""Acceptance criteria, one test per criterion.

Each test prints a single pass/fail line (visible with ``pytest -s`` or in
the -v listing) and asserts the criterion at its stated tolerance, including
the stated runtime budget.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from ivpbounds.bspline import (
    build_bump_family,
    build_scaled_bump,
    bump_gain,
    bump_kfold_integral,
    iterated_integral_constant,
    sign_pattern,
)
from ivpbounds.harness import (
    ExperimentSpec,
    fit_rate,
    run_adversary_pipeline,
    run_rate_experiment,
)
from ivpbounds.model import kfold_integral_oracle, unit_class
from ivpbounds.reduction import (
    MeanInstance,
    build_reduction_plan,
    exact_integrals,
    lower_bound_queries,
    recover_mean,
    solve_weights,
    verify_weight_identities,
)

CLI = [sys.executable, "-m", "ivpbounds.cli"]


def report(name: str, ok: bool, elapsed: float, budget: float, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    extra = f" ({detail})" if detail else ""
    print(f"[{status}] {name}: {elapsed:.1f}s of {budget:.0f}s budget{extra}")


def test_criterion_1_orthogonality_and_endpoints():
    start = time.time()
    ok = True
    worst_moment = 0.0
    worst_endpoint = 0.0
    for r in range(1, 9):
        pattern = sign_pattern(r)
        worst_moment = max(worst_moment, pattern.max_moment_residual(r))
        cls = unit_class(r)
        for c, d in ((0.0, 1.0), (0.1, 0.6)):
            bump = build_scaled_bump(c, d, cls)
            grid = np.linspace(c, d, 4_001)
            for j in range(r + 1):
                deriv = bump.body.derivative(j)
                bound = cls.derivative_bounds[j]
                if np.max(np.abs(deriv(grid))) > bound * (1.0 + 1e-12):
                    ok = False
                scale = max(1.0, bound)
                worst_endpoint = max(
                    worst_endpoint,
                    abs(deriv(c)) / scale,
                    abs(deriv(d)) / scale,
                )
    ok = ok and worst_moment <= 1e-10 and worst_endpoint <= 1e-9
    elapsed = time.time() - start
    report(
        "criterion 1 orthogonality/endpoints r=1..8",
        ok,
        elapsed,
        5.0,
        f"moment {worst_moment:.1e}, endpoint {worst_endpoint:.1e}",
    )
    assert worst_moment <= 1e-10
    assert worst_endpoint <= 1e-9
    assert ok
    assert elapsed < 5.0


def test_criterion_2_cell_constant_matches_oracle():
    start = time.time()
    worst = 0.0
    # alpha/16 fixture: exact cell constant for r = m = 1
    alpha = bump_gain(unit_class(1))
    fixture = iterated_integral_constant(1, 1, alpha).value
    assert fixture == pytest.approx(alpha / 16.0, rel=1e-12)
    for r in (1, 2, 3):
        for m in (1, 2, 3):
            for c, d in ((0.0, 1.0), (0.0, 0.5)):
                cls = unit_class(r, interval=(c, d))
                bump = build_scaled_bump(c, d, cls)
                closed = (d - c) ** (r + m) * iterated_integral_constant(
                    r, m, bump.alpha
                ).value
                oracle = kfold_integral_oracle(
                    bump.body, c, d, m, tol=1e-13, breakpoints=bump.body.breakpoints
                )
                worst = max(worst, abs(closed - oracle) / abs(oracle))
    elapsed = time.time() - start
    ok = worst <= 1e-7
    report("criterion 2 m-fold cell integral closed forms", ok, elapsed, 10.0,
           f"worst rel {worst:.1e}")
    assert worst <= 1e-7
    assert elapsed < 10.0


def test_criterion_3_family_integrals_match_quadrature():
    start = time.time()
    worst_kernel = 0.0
    for k in (1, 2, 3):
        for r in (1, 2):
            for n in (2, 4):
                fam = build_bump_family(unit_class(r), n)
                for i in range(n):
                    body = fam.bumps[i].body
                    closed = bump_kfold_integral(fam, i, k)
                    oracle = kfold_integral_oracle(
                        body, 0.0, 1.0, k, tol=1e-13, breakpoints=body.breakpoints
                    )
                    worst_kernel = max(worst_kernel, abs(closed - oracle) / abs(oracle))
    # nested-mode spot checks (nested cost grows exponentially with k)
    worst_nested = 0.0
    for k in (1, 2):
        fam = build_bump_family(unit_class(1), 2)
        body = fam.bumps[0].body
        closed = bump_kfold_integral(fam, 0, k)
        oracle = kfold_integral_oracle(
            body, 0.0, 1.0, k, tol=1e-10, mode="nested", breakpoints=body.breakpoints
        )
        worst_nested = max(worst_nested, abs(closed - oracle) / abs(oracle))
    elapsed = time.time() - start
    worst = max(worst_kernel, worst_nested)
    ok = worst <= 1e-6
    report("criterion 3 k-fold family integrals vs quadrature", ok, elapsed, 30.0,
           f"worst rel {worst:.1e}")
    assert worst <= 1e-6
    assert elapsed < 30.0


def test_criterion_4_reduction_identities_and_roundtrip():
    start = time.time()
    # weight fixtures derived by hand
    assert solve_weights(1).weights == (1.0,)
    np.testing.assert_allclose(solve_weights(2).weights, [-4.0, 4.0], atol=1e-12)
    worst_identity_ratio = 0.0
    worst_roundtrip = 0.0
    rng = np.random.default_rng(2024)
    for k in range(1, 7):
        for n in (2, 4, 8, 16):
            plan = build_reduction_plan(k, n, unit_class(1))
            rep = verify_weight_identities(plan)
            worst_identity_ratio = max(worst_identity_ratio, rep.max_residual / rep.scale)
            for _ in range(100):
                lam = rng.uniform(-1.0, 1.0, k * n)
                inst = MeanInstance(tuple(lam))
                rec = recover_mean(plan, exact_integrals(plan, inst))
                worst_roundtrip = max(
                    worst_roundtrip,
                    abs(rec.estimate - inst.mean) / max(1.0, abs(inst.mean)),
                )
    elapsed = time.time() - start
    ok = worst_identity_ratio <= 1e-8 and worst_roundtrip <= 1e-8
    report("criterion 4 collapse identities + mean roundtrip", ok, elapsed, 10.0,
           f"identities {worst_identity_ratio:.1e}, roundtrip {worst_roundtrip:.1e}")
    assert worst_identity_ratio <= 1e-8
    assert worst_roundtrip <= 1e-8
    assert elapsed < 10.0


DET_GRID = tuple(2**e for e in range(4, 13))
RAND_GRID = tuple(2**e for e in range(6, 13))


def test_criterion_5_deterministic_rate():
    start = time.time()
    slopes = {}
    for r in (1, 2):
        for k in (1, 2, 3):
            spec = ExperimentSpec(kind="rates", mode="det", r=r, k=k, cost_grid=DET_GRID)
            fit = fit_rate(run_rate_experiment(spec), "max")
            slopes[(r, k)] = fit.exponent
    elapsed = time.time() - start
    ok = all(abs(slopes[(r, k)] - r) <= 0.3 for r in (1, 2) for k in (1, 2, 3))
    detail = ", ".join(f"r={r} k={k}: {v:.2f}" for (r, k), v in slopes.items())
    report("criterion 5 deterministic endpoint rate", ok, elapsed, 60.0, detail)
    for (r, k), v in slopes.items():
        assert abs(v - r) <= 0.3, f"r={r} k={k} slope {v}"
    assert elapsed < 60.0


def test_criterion_6_randomized_rate_k_independent():
    start = time.time()
    slopes = {}
    for r in (1, 2):
        for k in (1, 2, 3):
            spec = ExperimentSpec(
                kind="rates", mode="rand", r=r, k=k, cost_grid=RAND_GRID,
                trials=100, seed=2718, mc_samples=4,
            )
            fit = fit_rate(run_rate_experiment(spec), "rms")
            slopes[(r, k)] = fit.exponent
    elapsed = time.time() - start
    ok = all(abs(slopes[(r, k)] - (r + 0.5)) <= 0.3 for r in (1, 2) for k in (1, 2, 3))
    detail = ", ".join(f"r={r} k={k}: {v:.2f}" for (r, k), v in slopes.items())
    report("criterion 6 randomized RMS rate, all k", ok, elapsed, 180.0, detail)
    for (r, k), v in slopes.items():
        assert abs(v - (r + 0.5)) <= 0.3, f"r={r} k={k} RMS slope {v}"
    assert elapsed < 180.0


def test_criterion_7_adversary_end_to_end():
    start = time.time()
    ratios = {}
    for k in (1, 2):
        for n in (8, 16):
            spec = ExperimentSpec(
                kind="adversary", setting="rand", k=k, r=1, n=n,
                trials=200, seed=31415, cells=32, mc_samples=4,
            )
            rep = run_adversary_pipeline(spec)
            assert rep.epsilon_out > 0
            ratios[(k, n)] = rep.observed_rms / rep.epsilon_out
    elapsed = time.time() - start
    ok = all(v <= 10.0 for v in ratios.values())
    detail = ", ".join(f"k={k} n={n}: {v:.3f}" for (k, n), v in ratios.items())
    report("criterion 7 adversary pipeline vs eps1 bookkeeping", ok, elapsed, 120.0, detail)
    for key, v in ratios.items():
        assert v <= 10.0, f"{key} ratio {v}"
    assert elapsed < 120.0


def test_criterion_8_bound_calculators():
    start = time.time()
    table = [
        ("quant", 1000, 0.01, 100),
        ("rand", 1000, 0.01, 1000),
        ("quant", 10, 1.0, 1),
        ("rand", 10, 1.0, 1),
        ("quant", 50, 0.5, 2),
        ("rand", 50, 0.5, 4),
        ("quant", 3, 0.001, 3),
        ("rand", 10**7, 0.001, 10**6),
        ("quant", 7, 0.3, 4),
        ("rand", 7, 0.3, 7),
    ]
    ok = all(
        lower_bound_queries(setting, count, eps) == expected
        for setting, count, eps, expected in table
    )
    elapsed = time.time() - start
    report("criterion 8 query bound calculators", ok, elapsed, 1.0)
    assert ok
    assert elapsed < 1.0


def test_criterion_9_negative_controls():
    start = time.time()
    spline = subprocess.run(
        CLI + ["verify-spline", "--r", "1", "--negative-control"],
        capture_output=True, timeout=60,
    )
    weights = subprocess.run(
        CLI + ["verify-reduction", "--k", "2", "--n", "4", "--negative-control"],
        capture_output=True, timeout=60,
    )
    elapsed = time.time() - start
    ok = spline.returncode == 1 and weights.returncode == 1
    report("criterion 9 corrupted fixtures exit 1", ok, elapsed, 5.0,
           f"exits {spline.returncode}/{weights.returncode}")
    assert spline.returncode == 1
    assert weights.returncode == 1
    assert elapsed < 5.0
