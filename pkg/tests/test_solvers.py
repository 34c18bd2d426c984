import math

import numpy as np
import pytest

from ivpbounds.bspline import (
    build_bump_family,
    bump_kfold_integral,
    bump_partial_kfold_integral,
)
from ivpbounds.model import (
    CostCounter,
    PureTimeRHS,
    ScalarIVP,
    kfold_integral_oracle,
    polynomial_part,
    pure_time_ivp,
    to_first_order_system,
    unit_class,
)
from ivpbounds.piecewise import PiecewisePolynomial
from ivpbounds.reduction import MeanInstance, assemble_adversarial_rhs, build_reduction_plan, exact_integrals
from ivpbounds.solvers import (
    SolverConfig,
    deterministic_kfold_solver,
    randomized_cv_solver,
    rk4_reference_solver,
)


def poly_rhs(coefs, cls=None):
    body = PiecewisePolynomial([0.0, 1.0], [list(coefs)])
    return PureTimeRHS(body, cls or unit_class(1))


def rand_config(cells, degree, m=4, seed=0):
    return SolverConfig(
        cells=cells, local_degree=degree, mc_samples_per_cell=m, seed=seed, mode="randomized"
    )


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(cells=0, local_degree=0)
        with pytest.raises(ValueError):
            SolverConfig(cells=1, local_degree=-1)
        with pytest.raises(ValueError):
            SolverConfig(cells=1, local_degree=0, mode="bogus")
        with pytest.raises(ValueError):
            SolverConfig(cells=1, local_degree=0, mc_samples_per_cell=0, mode="randomized")

    def test_mode_mismatch_rejected(self):
        rhs = poly_rhs([1.0])
        with pytest.raises(ValueError):
            deterministic_kfold_solver(rhs, 1, rand_config(4, 0))
        with pytest.raises(ValueError):
            randomized_cv_solver(rhs, 1, SolverConfig(cells=4, local_degree=0))


class TestDeterministicSolver:
    def test_polynomial_reproduction(self):
        # degree <= local_degree: interpolation is exact, so is the integral
        rhs = poly_rhs([0.3, -1.2, 0.9])
        truth = kfold_integral_oracle(rhs, 0.0, 1.0, 3, tol=1e-13)
        result = deterministic_kfold_solver(rhs, 3, SolverConfig(cells=5, local_degree=2))
        assert result.endpoint_value == pytest.approx(truth, abs=1e-12)

    def test_cost_formula(self):
        rhs = poly_rhs([1.0])
        result = deterministic_kfold_solver(rhs, 1, SolverConfig(cells=10, local_degree=2))
        assert result.cost == 30

    def test_cost_matches_external_instrumentation(self):
        counter = CostCounter()
        body = poly_rhs([0.5, 0.5]).g
        rhs = PureTimeRHS(counter.wrap_univariate(body), unit_class(1))
        result = deterministic_kfold_solver(rhs, 2, SolverConfig(cells=9, local_degree=1))
        assert result.cost == counter.count

    def test_rate_on_adversarial_assembly(self):
        # r=1, k=2: endpoint error vs the closed-form truth, slope near 1
        plan = build_reduction_plan(2, 2, unit_class(1))
        inst = MeanInstance((1.0, 1.0, 1.0, 1.0))
        rhs = assemble_adversarial_rhs(plan.shift, inst, 0)
        truth = exact_integrals(plan, inst)[0]
        errs, costs = [], []
        for cells in (16, 32, 64, 128, 256, 512):
            res = deterministic_kfold_solver(rhs, 2, SolverConfig(cells=cells, local_degree=0))
            errs.append(abs(res.endpoint_value - truth))
            costs.append(res.cost)
        slope = -np.polyfit(np.log(costs), np.log(errs), 1)[0]
        assert 0.7 <= slope <= 1.3

    def test_grid_values_match_partial_integrals(self):
        # the returned approximation is the exact k-fold integral of the
        # interpolant; on a single in-class bump it tracks the closed-form
        # partial integrals to interpolation accuracy
        fam = build_bump_family(unit_class(1), 2)
        rhs = PureTimeRHS(fam.bumps[0].body.translated(0.0), unit_class(1))
        body = fam.bumps[0].body
        rhs = PureTimeRHS(body, unit_class(1))
        res = deterministic_kfold_solver(rhs, 2, SolverConfig(cells=256, local_degree=0))
        for x in (0.3, 0.55, 0.9):
            truth = bump_partial_kfold_integral(fam, 0, 2, x)
            assert res.approximation(x) == pytest.approx(truth, abs=5e-5)


class TestRandomizedSolver:
    def test_zero_variance_on_polynomials(self):
        rhs = poly_rhs([0.1, 0.7])
        truth = kfold_integral_oracle(rhs, 0.0, 1.0, 2, tol=1e-13)
        values = {
            randomized_cv_solver(rhs, 2, rand_config(6, 1, seed=s)).endpoint_value
            for s in (1, 2, 3)
        }
        assert all(abs(v - truth) < 1e-12 for v in values)

    def test_cost_formula(self):
        rhs = poly_rhs([1.0])
        result = randomized_cv_solver(rhs, 1, rand_config(10, 1, m=5))
        assert result.cost == 10 * (2 + 5)

    def test_same_seed_bit_identical(self):
        rhs = PureTimeRHS(lambda x: np.sin(2.0 * x), unit_class(1))
        a = randomized_cv_solver(rhs, 2, rand_config(16, 0, seed=42))
        b = randomized_cv_solver(rhs, 2, rand_config(16, 0, seed=42))
        assert a.endpoint_value == b.endpoint_value
        np.testing.assert_array_equal(a.approximation.values, b.approximation.values)

    def test_unbiased_endpoint(self):
        rhs = PureTimeRHS(lambda x: np.sin(3.0 * x), unit_class(1))
        truth = kfold_integral_oracle(rhs, 0.0, 1.0, 2, tol=1e-12)
        vals = np.array(
            [
                randomized_cv_solver(rhs, 2, rand_config(8, 0, m=2, seed=s)).endpoint_value
                for s in range(2000)
            ]
        )
        stderr = vals.std(ddof=1) / math.sqrt(len(vals))
        assert abs(vals.mean() - truth) <= 3.0 * stderr

    def test_unbiased_at_interior_node(self):
        fam = build_bump_family(unit_class(1), 2)
        rhs = PureTimeRHS(fam.bumps[0].body, unit_class(1))
        node_index = 4  # of 8 cells: x = 0.5
        vals = []
        for s in range(2000):
            res = randomized_cv_solver(rhs, 2, rand_config(8, 0, m=2, seed=s))
            vals.append(res.approximation.values[node_index])
        vals = np.array(vals)
        x = 0.5
        truth = bump_partial_kfold_integral(fam, 0, 2, x)
        stderr = vals.std(ddof=1) / math.sqrt(len(vals))
        assert abs(vals.mean() - truth) <= 3.0 * stderr

    def test_rms_rate_on_adversarial_assembly(self):
        # r=1, M=4, cells 8..256: RMS slope around 1.5
        plan = build_reduction_plan(2, 3, unit_class(1))
        inst = MeanInstance((1.0, 1.0, -1.0, 1.0, 1.0, 1.0))
        rhs = assemble_adversarial_rhs(plan.shift, inst, 0)
        truth = exact_integrals(plan, inst)[0]
        costs, rmss = [], []
        for cells in (8, 16, 32, 64, 128, 256):
            errs = [
                randomized_cv_solver(rhs, 2, rand_config(cells, 0, m=4, seed=s)).endpoint_value
                - truth
                for s in range(100)
            ]
            rmss.append(float(np.sqrt(np.mean(np.square(errs)))))
            costs.append(cells * 5)
        slope = -np.polyfit(np.log(costs), np.log(rmss), 1)[0]
        assert 1.2 <= slope <= 1.8

    def test_cost_matches_external_instrumentation(self):
        counter = CostCounter()
        rhs = PureTimeRHS(counter.wrap_univariate(np.cos), unit_class(1))
        result = randomized_cv_solver(rhs, 1, rand_config(7, 1, m=3, seed=1))
        assert result.cost == counter.count == 7 * (2 + 3)


class TestRK4:
    def test_polynomial_drift_exact(self):
        zero = PureTimeRHS(lambda x: 0.0 * np.asarray(x, dtype=float), unit_class(1))
        ivp = pure_time_ivp(zero, 2, (0.0, 1.0))
        res = rk4_reference_solver(to_first_order_system(ivp), 16)
        assert res.endpoint_value == pytest.approx(1.0, abs=1e-13)
        assert res.cost == 64

    def test_zero_rhs_solution_is_polynomial_part(self):
        zero = PureTimeRHS(lambda x: 0.0 * np.asarray(x, dtype=float), unit_class(1))
        ivp = pure_time_ivp(zero, 3, (0.5, -1.0, 2.0))
        res = rk4_reference_solver(to_first_order_system(ivp), 32)
        for x in (0.25, 0.5, 1.0):
            assert res.approximation(x) == pytest.approx(polynomial_part(ivp, x), abs=1e-9)

    def test_smooth_family_against_oracle(self):
        # r=3 bumps are C^3, so 1e4 RK4 steps land well inside 1e-8
        cls = unit_class(3)
        fam = build_bump_family(cls, 2)
        body = fam.bumps[0].body
        rhs = PureTimeRHS(body, cls)
        ivp = pure_time_ivp(rhs, 2, (0.3, -0.2))
        res = rk4_reference_solver(to_first_order_system(ivp), 10_000)
        truth = polynomial_part(ivp, 1.0) + kfold_integral_oracle(
            body, 0.0, 1.0, 2, tol=1e-12, breakpoints=body.breakpoints
        )
        assert res.endpoint_value == pytest.approx(truth, abs=1e-8)

    def test_fourth_order_on_smooth_problem(self):
        # u' = u, u(0) = 1: halving h cuts the error ~16x
        ivp = ScalarIVP(1, 0, lambda x, u: u, (1.0,), unit_class(1))
        system = to_first_order_system(ivp)
        errs, costs = [], []
        for steps in (8, 16, 32, 64, 128):
            res = rk4_reference_solver(system, steps)
            errs.append(abs(res.endpoint_value - math.e))
            costs.append(res.cost)
        slope = -np.polyfit(np.log(costs), np.log(errs), 1)[0]
        assert 3.5 <= slope <= 4.5

    def test_steps_guard(self):
        zero = PureTimeRHS(lambda x: 0.0 * np.asarray(x, dtype=float), unit_class(1))
        system = to_first_order_system(pure_time_ivp(zero, 1, (0.0,)))
        with pytest.raises(ValueError):
            rk4_reference_solver(system, 0)
