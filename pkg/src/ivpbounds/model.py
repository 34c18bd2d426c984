"""Problem classes, order reduction, cost accounting, and brute-force oracles.

A k-th order scalar initial-value problem ``u^(k) = g(x, u, ..., u^(q))`` is
carried around together with the smoothness class of its right-hand side.
When ``g`` depends on ``x`` alone the problem collapses to k-fold integration,
which is what the quadrature oracles here compute by brute force; every
closed-form identity elsewhere in the package is validated against them.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .piecewise import PiecewisePolynomial


class OracleConvergenceError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


@dataclass(frozen=True)
class SmoothnessClass:
    """Functions with ``r`` continuous derivatives, ``|g^(j)| <= bounds[j]``."""

    r: int
    derivative_bounds: tuple[float, ...]
    interval: tuple[float, float]

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("smoothness order r must be >= 1")
        if len(self.derivative_bounds) != self.r + 1:
            raise ValueError("need exactly r + 1 derivative bounds")
        if any(d <= 0 for d in self.derivative_bounds):
            raise ValueError("derivative bounds must be positive")
        a, b = self.interval
        if not a < b:
            raise ValueError("interval must satisfy a < b")

    @property
    def a(self) -> float:
        return self.interval[0]

    @property
    def b(self) -> float:
        return self.interval[1]

    @property
    def bounds(self) -> np.ndarray:
        return np.asarray(self.derivative_bounds, dtype=float)

    def scaled(self, factor: float) -> "SmoothnessClass":
        """Same order and interval with all bounds multiplied by ``factor``."""
        return SmoothnessClass(
            self.r, tuple(d * factor for d in self.derivative_bounds), self.interval
        )


def unit_class(r: int, interval: tuple[float, float] = (0.0, 1.0)) -> SmoothnessClass:
    """Convenience class with every derivative bound equal to 1."""
    return SmoothnessClass(r, (1.0,) * (r + 1), interval)


@dataclass(frozen=True)
class ScalarIVP:
    """u^(order) = rhs(x, u, u', ..., u^(dependence)) with order initial values."""

    order: int
    dependence: int
    rhs: Callable[..., float]
    initial_values: tuple[float, ...]
    smoothness: SmoothnessClass

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order k must be >= 1")
        if not 0 <= self.dependence < self.order:
            raise ValueError("need 0 <= q < k")
        if len(self.initial_values) != self.order:
            raise ValueError("need exactly k initial values")


@dataclass(frozen=True)
class PureTimeRHS:
    """Right-hand side depending on x alone; the integration subclass.

    For piecewise-polynomial bodies, class membership can be checked on a
    dense grid; black-box callables are trusted (their sup norms are not
    computable).
    """

    g: Callable[[np.ndarray], np.ndarray] | PiecewisePolynomial
    smoothness: SmoothnessClass

    def __call__(self, x):
        return self.g(x)

    def membership_defects(self, grid_size: int = 100_000) -> np.ndarray:
        """Per-derivative excesses ``max|g^(j)| - D_j`` on a uniform grid.

        Negative entries mean the bound holds with room to spare.  Only
        available when ``g`` is a PiecewisePolynomial.
        """
        if not isinstance(self.g, PiecewisePolynomial):
            raise TypeError("membership check needs a piecewise-polynomial rhs")
        a, b = self.smoothness.interval
        grid = np.linspace(a, b, grid_size)
        out = np.empty(self.smoothness.r + 1)
        for j in range(self.smoothness.r + 1):
            vals = self.g.derivative(j)(grid)
            out[j] = np.max(np.abs(vals)) - self.smoothness.derivative_bounds[j]
        return out

    def is_member(self, grid_size: int = 100_000, slack: float = 1e-9) -> bool:
        scale = np.maximum(1.0, self.smoothness.bounds)
        return bool(np.all(self.membership_defects(grid_size) <= slack * scale))


@dataclass(frozen=True)
class FirstOrderSystem:
    """Autonomous companion system; state (x, u, u', ..., u^(k-1))."""

    dimension: int
    vector_field: Callable[[np.ndarray], np.ndarray]
    initial_state: tuple[float, ...]
    interval: tuple[float, float]

    def __post_init__(self):
        if len(self.initial_state) != self.dimension:
            raise ValueError("initial state length must match dimension")
        if self.initial_state[0] != self.interval[0]:
            raise ValueError("state component 0 must start at the left endpoint")


class CostCounter:
    """Counts right-hand-side evaluations.

    Each experiment trial owns a private counter, so increments need no
    locking; vectorized calls count one evaluation per grid point.
    """

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def add(self, n: int = 1) -> None:
        if n < 0:
            raise ValueError("cannot decrement a cost counter")
        self.count += n

    def wrap_univariate(self, g: Callable) -> Callable:
        def counted(x):
            self.add(int(np.size(x)))
            return g(x)

        return counted

    def wrap_call(self, f: Callable) -> Callable:
        def counted(*args):
            self.add(1)
            return f(*args)

        return counted


@dataclass(frozen=True)
class SolutionApproximation:
    """Grid values plus a bounded evaluator by linear interpolation."""

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or nodes.size != values.size:
            raise ValueError("need matching 1-d nodes and values, length >= 2")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    def __call__(self, x):
        return np.interp(x, self.nodes, self.values)

    @property
    def evaluator(self) -> Callable:
        return self.__call__


def to_first_order_system(p: ScalarIVP) -> FirstOrderSystem:
    """Companion first-order system of dimension k + 1.

    State layout ``(u_0, u_1, ..., u_k)`` with ``u_0' = 1`` (so ``u_0 = x``),
    ``u_i' = u_{i+1}`` for ``1 <= i <= k - 1`` and
    ``u_k' = rhs(u_0, u_1, ..., u_{q+1})``.  The scalar solution is ``u_1``.
    """
    k, q, rhs = p.order, p.dependence, p.rhs

    def vector_field(state: np.ndarray) -> np.ndarray:
        out = np.empty(k + 1)
        out[0] = 1.0
        out[1:k] = state[2 : k + 1]
        out[k] = rhs(state[0], *state[1 : q + 2])
        return out

    a = p.smoothness.a
    initial = (a,) + tuple(float(v) for v in p.initial_values)
    return FirstOrderSystem(k + 1, vector_field, initial, p.smoothness.interval)


def pure_time_ivp(
    rhs: PureTimeRHS, order: int, initial_values: Sequence[float]
) -> ScalarIVP:
    """Wrap a time-only right-hand side as a ScalarIVP with q = 0."""
    g = rhs.g
    return ScalarIVP(
        order, 0, lambda x, *_ys: float(g(x)), tuple(initial_values), rhs.smoothness
    )


def polynomial_part(p: ScalarIVP, x: float) -> float:
    """The initial-data polynomial ``sum_j u_a^j (x - a)^j / j!``."""
    a, b = p.smoothness.interval
    if not a <= x <= b:
        raise ValueError(f"x={x} outside [{a}, {b}]")
    dx = x - a
    return float(
        sum(v * dx**j / math.factorial(j) for j, v in enumerate(p.initial_values))
    )


def _quad(f, a, x, epsabs, pts):
    with warnings.catch_warnings():
        # convergence failures are reported through the error estimate below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(
            f, a, x, epsabs=epsabs, epsrel=1e-12, limit=200, points=pts
        )


def _inner_points(breakpoints, a, x):
    if breakpoints is None:
        return None
    inner = np.asarray(breakpoints, dtype=float)
    inner = inner[(inner > a) & (inner < x)]
    return np.unique(inner) if inner.size else None


def _kernel_quad(g, a, x, k, tol, breakpoints):
    fac = math.factorial(k - 1)

    def integrand(t):
        return (x - t) ** (k - 1) / fac * g(t)

    val, err = _quad(integrand, a, x, 0.5 * tol, _inner_points(breakpoints, a, x))
    if err > max(tol, 1e-14 * abs(val)):
        raise OracleConvergenceError(
            f"kernel quadrature error estimate {err:.3e} exceeds tol {tol:.3e}"
        )
    return val


def _nested_quad(g, a, x, k, tol, breakpoints):
    pts = _inner_points(breakpoints, a, x)
    if k == 1:
        val, err = _quad(g, a, x, 0.25 * tol, pts)
    else:
        inner_tol = 0.25 * tol

        def level(t):
            return _nested_quad(g, a, t, k - 1, inner_tol, breakpoints)

        val, err = _quad(level, a, x, 0.25 * tol, pts)
    if err > max(tol, 1e-14 * abs(val)):
        raise OracleConvergenceError(
            f"nested quadrature error estimate {err:.3e} exceeds tol {tol:.3e}"
        )
    return val


def kfold_integral_oracle(
    g: Callable,
    a: float,
    x: float,
    k: int,
    tol: float = 1e-10,
    mode: str = "kernel",
    breakpoints=None,
) -> float:
    """Brute-force k-fold nested integral of ``g`` from ``a`` to ``x``.

    The default mode integrates the single-kernel form
    ``int_a^x (x - t)^(k-1) / (k-1)! g(t) dt`` adaptively; ``mode="nested"``
    runs literally nested quadrature for cross-validation of that identity
    (its cost grows exponentially in k, keep k small there).  Passing the
    integrand's breakpoints keeps the quadrature exact on piecewise
    polynomials.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if x < a:
        raise ValueError("need a <= x")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if x == a:
        return 0.0
    if mode == "kernel":
        return _kernel_quad(g, a, x, k, tol, breakpoints)
    if mode == "nested":
        return _nested_quad(g, a, x, k, tol, breakpoints)
    raise ValueError(f"unknown mode {mode!r}")


def sup_error(u_ref: Callable, l: Callable, grid_size: int = 10_000,
              interval: tuple[float, float] | None = None) -> float:
    """Max deviation on a uniform grid; a lower estimate of the true sup.

    ``interval`` defaults to the approximation's node range when ``l`` is a
    SolutionApproximation.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    if interval is None:
        if isinstance(l, SolutionApproximation):
            interval = (float(l.nodes[0]), float(l.nodes[-1]))
        else:
            raise ValueError("interval required for generic evaluators")
    grid = np.linspace(interval[0], interval[1], grid_size)
    try:
        ref = np.asarray(u_ref(grid), dtype=float)
        if ref.shape != grid.shape:
            raise TypeError
    except TypeError:
        ref = np.array([float(u_ref(t)) for t in grid])
    approx = np.asarray(l(grid), dtype=float)
    return float(np.max(np.abs(ref - approx)))
