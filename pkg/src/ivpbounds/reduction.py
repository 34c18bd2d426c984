"""Mean recovery from k iterated integrals of shifted bump combinations.

Given kn numbers ``lambda_i`` with ``|lambda_i| <= 1``, hide them in k
right-hand sides ``g_j = sum_i lambda_i f_{X_j(i)}`` built from a bump family
on 2kn cells, where the shift maps ``X_j(i) = n(k - j) + i - 1`` place copy j
of the data n cells further left than copy j-1.  A weighted sum of the k
k-fold integrals ``I_j`` then collapses, through a transpose-Vandermonde
choice of weights, to the mean of the ``lambda_i`` times an explicit
constant.  Any integrator that approximates the ``I_j`` to accuracy eps
therefore estimates the mean to accuracy ``eps_out = (kn)^r C sum|c_j| eps``,
which is what the query-count calculators at the bottom consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .bspline import BumpFamily, assemble_weighted, build_bump_family
from .model import PureTimeRHS, SmoothnessClass

MAX_WEIGHT_ORDER = 12

_SETTING_ALIASES = {
    "rand": "randomized",
    "randomized": "randomized",
    "quant": "quantum",
    "quantum": "quantum",
}


def canonical_setting(setting: str) -> str:
    try:
        return _SETTING_ALIASES[setting]
    except KeyError:
        raise ValueError(f"unknown setting {setting!r}") from None


@dataclass(frozen=True)
class ShiftPlan:
    """2kn-cell partition with the k injective shift maps and its bump family."""

    k: int
    n: int
    mesh: float
    family: BumpFamily

    @property
    def anchors(self) -> tuple[float, ...]:
        return self.family.anchors

    @property
    def cells(self) -> int:
        return 2 * self.k * self.n

    def shift_map(self, j: int) -> np.ndarray:
        """Indices ``X_j(i) = n(k - j) + i - 1`` for i = 0..kn-1."""
        if not 0 <= j < self.k:
            raise ValueError("shift index out of range")
        return self.n * (self.k - j) + np.arange(self.k * self.n) - 1

    @property
    def maps(self) -> np.ndarray:
        return np.vstack([self.shift_map(j) for j in range(self.k)])


def build_shift_plan(k: int, n: int, smoothness: SmoothnessClass) -> ShiftPlan:
    if k < 1 or n < 1:
        raise ValueError("need k >= 1 and n >= 1")
    a, b = smoothness.interval
    mesh = (b - a) / (2 * k * n)
    if mesh >= 2.0:
        raise ValueError("mesh (b - a) / (2kn) must be < 2")
    family = build_bump_family(smoothness, 2 * k * n)
    return ShiftPlan(k, n, mesh, family)


@dataclass(frozen=True)
class WeightVector:
    """Weights making ``sum_j c_j (1/2 + j/(2k) - x)^(k-1)`` identically 1."""

    k: int
    weights: tuple[float, ...]
    condition_estimate: float

    @property
    def abs_sum(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    def poly_value(self, x: float) -> float:
        nodes = 0.5 + np.arange(self.k) / (2.0 * self.k)
        return float(np.sum(np.asarray(self.weights) * (nodes - x) ** (self.k - 1)))


@lru_cache(maxsize=None)
def solve_weights(k: int) -> WeightVector:
    """Solve the coefficient-matching system for the collapse weights.

    Expanding ``(t_j - x)^(k-1)`` with ``t_j = 1/2 + j/(2k)`` and equating the
    coefficient of ``x^p`` to ``[p == 0]`` gives a k x k system with a
    transpose Vandermonde matrix; its solution does not depend on n.  Solved
    by LAPACK partial pivoting; the condition number is recorded because the
    weights grow combinatorially with k.
    """
    if not 1 <= k <= MAX_WEIGHT_ORDER:
        raise ValueError(f"k must be in [1, {MAX_WEIGHT_ORDER}]")
    nodes = 0.5 + np.arange(k) / (2.0 * k)
    rows = []
    rhs = np.zeros(k)
    rhs[0] = 1.0
    for p in range(k):
        rows.append(math.comb(k - 1, p) * (-1.0) ** p * nodes ** (k - 1 - p))
    matrix = np.vstack(rows)
    cond = float(np.linalg.cond(matrix))
    if not np.isfinite(cond) or cond > 1e15:
        raise np.linalg.LinAlgError(f"weight system near-singular (cond={cond:.2e})")
    weights = np.linalg.solve(matrix, rhs)
    vec = WeightVector(k, tuple(float(c) for c in weights), cond)
    # sanity: the defining identity at k + 3 fresh sample points
    samples = np.linspace(-0.3, 1.3, k + 3)
    worst = max(abs(vec.poly_value(x) - 1.0) for x in samples)
    if worst > 1e-8 * max(1.0, vec.abs_sum):
        raise np.linalg.LinAlgError(
            f"weight identity residual {worst:.3e} too large for k={k}"
        )
    return vec


@dataclass(frozen=True)
class ReductionPlan:
    """Everything needed to turn k integral values into a mean estimate."""

    shift: ShiftPlan
    weights: WeightVector
    constant: float
    smoothness: SmoothnessClass

    @property
    def k(self) -> int:
        return self.shift.k

    @property
    def n(self) -> int:
        return self.shift.n

    @property
    def family(self) -> BumpFamily:
        return self.shift.family

    def inflation_factor(self) -> float:
        """``(kn)^r C sum_j |c_j|``: error gain from integrals to the mean."""
        kn = self.k * self.n
        return kn**self.smoothness.r * self.constant * self.weights.abs_sum


def recovery_constant(smoothness: SmoothnessClass, k: int, alpha: float) -> float:
    """``(b - a)^-(k+r) 2^(r+1) (k-1)! / v_1`` with v_1 the cell constant."""
    from .bspline import iterated_integral_constant

    r = smoothness.r
    a, b = smoothness.interval
    v1 = iterated_integral_constant(r, 1, alpha).value
    return (b - a) ** (-(k + r)) * 2.0 ** (r + 1) * math.factorial(k - 1) / v1


def build_reduction_plan(k: int, n: int, smoothness: SmoothnessClass) -> ReductionPlan:
    shift = build_shift_plan(k, n, smoothness)
    weights = solve_weights(k)
    constant = recovery_constant(smoothness, k, shift.family.alpha)
    return ReductionPlan(shift, weights, constant, smoothness)


@dataclass(frozen=True)
class WeightIdentityReport:
    """Residuals of the collapse identities over every (i, m)."""

    k: int
    n: int
    residual_mean_row: float  # | sum_j c_j (...)^(k-1) - 1 |, worst i
    residual_higher_rows: float  # | sum_j c_j (...)^(k-m) |, worst i, m >= 2
    scale: float  # sum_j |c_j|

    @property
    def max_residual(self) -> float:
        return max(self.residual_mean_row, self.residual_higher_rows)

    def passed(self, tol_factor: float = 1e-8) -> bool:
        return self.max_residual <= tol_factor * self.scale


def verify_weight_identities(
    plan: ReductionPlan, weights: WeightVector | None = None
) -> WeightIdentityReport:
    """Check that the shifted-cell sums collapse to (1, 0, ..., 0).

    For every i the sum ``sum_j c_j (1 - (X_j(i) + 1) / (2kn))^(k-m)`` must be
    1 for m = 1 and 0 for m = 2..k.  A corrupted weight vector can be passed
    in to exercise the failure path.
    """
    k, n = plan.k, plan.n
    wv = plan.weights if weights is None else weights
    c = np.asarray(wv.weights)
    cells = 2 * k * n
    bases = 1.0 - (plan.shift.maps + 1.0) / cells  # shape (k, kn)
    worst_mean = 0.0
    worst_higher = 0.0
    for m in range(1, k + 1):
        sums = c @ bases ** (k - m)
        target = 1.0 if m == 1 else 0.0
        worst = float(np.max(np.abs(sums - target)))
        if m == 1:
            worst_mean = worst
        else:
            worst_higher = max(worst_higher, worst)
    return WeightIdentityReport(k, n, worst_mean, worst_higher, wv.abs_sum)


@dataclass(frozen=True)
class MeanInstance:
    """The hidden numbers; all must lie in [-1, 1]."""

    lambdas: tuple[float, ...]

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.ndim != 1 or lam.size < 1:
            raise ValueError("need a nonempty 1-d lambda vector")
        if np.max(np.abs(lam)) > 1.0 + 1e-12:
            raise ValueError("every |lambda_i| must be <= 1")

    @property
    def mean(self) -> float:
        return float(np.mean(self.lambdas))


def assemble_adversarial_rhs(plan: ShiftPlan, inst: MeanInstance, j: int) -> PureTimeRHS:
    """``g_j = sum_i lambda_i f_{X_j(i)}`` as an exact piecewise polynomial.

    Supports are disjoint, so with ``|lambda_i| <= 1`` the assembly inherits
    class membership from the individual bumps.
    """
    lam = np.asarray(inst.lambdas, dtype=float)
    if lam.size != plan.k * plan.n:
        raise ValueError("instance size must be kn")
    cell_weights = np.zeros(plan.cells)
    cell_weights[plan.shift_map(j)] = lam
    body = assemble_weighted(plan.family, cell_weights)
    return PureTimeRHS(body, plan.family.smoothness)


def exact_integrals(plan: ReductionPlan, inst: MeanInstance) -> np.ndarray:
    """The k exact k-fold integrals ``I_j``, via the closed forms (no quadrature)."""
    from .bspline import family_kfold_integrals

    lam = np.asarray(inst.lambdas, dtype=float)
    if lam.size != plan.k * plan.n:
        raise ValueError("instance size must be kn")
    cell_values = family_kfold_integrals(plan.family, plan.k)
    return cell_values[plan.shift.maps] @ lam


@dataclass(frozen=True)
class RecoveredMean:
    estimate: float
    epsilon_in: float
    epsilon_out: float


def recover_mean(
    plan: ReductionPlan, approximations, epsilon_in: float = 0.0
) -> RecoveredMean:
    """Weighted collapse ``(kn)^r C sum_j c_j A_j`` plus error bookkeeping.

    With exact integrals the estimate equals ``mean(lambda)``; with integrals
    known to accuracy ``epsilon_in`` the estimate is within
    ``epsilon_out = (kn)^r C sum_j |c_j| epsilon_in`` of it.
    """
    a = np.asarray(approximations, dtype=float)
    if a.shape != (plan.k,):
        raise ValueError("need exactly k approximation values")
    if epsilon_in < 0:
        raise ValueError("epsilon_in must be >= 0")
    c = np.asarray(plan.weights.weights)
    kn = plan.k * plan.n
    gain = kn**plan.smoothness.r * plan.constant
    estimate = float(gain * (c @ a))
    epsilon_out = float(gain * np.sum(np.abs(c)) * epsilon_in)
    return RecoveredMean(estimate, float(epsilon_in), epsilon_out)


def median_amplify(estimates) -> float:
    """Lower median; robust aggregation of repeated estimates."""
    vals = np.sort(np.asarray(estimates, dtype=float))
    if vals.size == 0:
        raise ValueError("need at least one estimate")
    return float(vals[(vals.size - 1) // 2])


def _snap_ceil(v: float) -> int:
    """ceil with a relative snap so exact powers do not round up spuriously."""
    nearest = round(v)
    if abs(v - nearest) <= 1e-9 * max(1.0, abs(v)):
        return int(nearest)
    return math.ceil(v)


def lower_bound_queries(setting: str, count: int, epsilon1: float) -> int:
    """Argument of the query lower bound for estimating a mean of ``count`` items.

    ``min(count, ceil(1/eps))`` in the quantum setting and
    ``min(count, ceil((1/eps)^2))`` in the randomized setting.  Constants are
    suppressed: these are order-of-magnitude figures, not certified counts.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if epsilon1 <= 0:
        raise ValueError("epsilon1 must be positive")
    setting = canonical_setting(setting)
    inv = 1.0 / epsilon1
    if setting == "quantum":
        return min(count, _snap_ceil(inv))
    return min(count, _snap_ceil(inv * inv))


def suggest_n(setting: str, epsilon: float, k: int, smoothness: SmoothnessClass) -> int:
    """Instance size making the bound argument match the target accuracy.

    ``ceil((1/eps)^(1/(r+1)))`` in the quantum setting and
    ``ceil((1/eps)^(1/(r+1/2)))`` in the randomized setting; the leading
    constant is fixed to 1 and the result is order-only.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if k < 1:
        raise ValueError("k must be >= 1")
    setting = canonical_setting(setting)
    r = smoothness.r
    exponent = 1.0 / (r + 1.0) if setting == "quantum" else 1.0 / (r + 0.5)
    return max(1, _snap_ceil((1.0 / epsilon) ** exponent))


def plan_to_json(
    plan: ReductionPlan, report: WeightIdentityReport | None = None
) -> dict:
    """JSON-ready description of a reduction plan (weights, constant, residuals)."""
    out = {
        "schema_version": 1,
        "k": plan.k,
        "n": plan.n,
        "r": plan.smoothness.r,
        "interval": list(plan.smoothness.interval),
        "mesh": plan.shift.mesh,
        "weights": list(plan.weights.weights),
        "weight_condition_estimate": plan.weights.condition_estimate,
        "constant": plan.constant,
        "inflation_factor": plan.inflation_factor(),
    }
    if report is not None:
        out["residuals"] = {
            "mean_row": report.residual_mean_row,
            "higher_rows": report.residual_higher_rows,
            "scale": report.scale,
        }
    return out
