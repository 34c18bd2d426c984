"""Perfect B-splines, scaled bumps, and their closed-form iterated integrals.

The construction chain is:

* ``U_n``, the Chebyshev polynomial of the second kind, whose n zeros
  ``cos(i pi / (n+1))`` sit inside (-1, 1);
* the alternating sign pattern of ``U_n`` between those zeros, normalized to
  +1 on the interval touching t = 1.  Its key property is that it integrates
  to zero against every polynomial of degree < n, which is what makes all
  derivatives of the spline below vanish at both endpoints;
* the perfect B-spline of degree n: the n-fold antiderivative of that step
  function started at -1, a piecewise polynomial whose n-th derivative is
  +-1 almost everywhere and which is supported exactly on [-1, 1];
* scaled bumps: affine copies of the degree r+1 spline squeezed into a cell
  [c, d] and multiplied by the largest gain keeping all derivatives up to
  order r inside prescribed bounds;
* translated bump families on a uniform grid, whose k-fold integrals have a
  closed form assembled from per-cell constants.  Those closed forms are the
  exact "truth" values every solver experiment is measured against.

Everything here is materialized as exact piecewise polynomials; quadrature
appears only in the cross-check oracles, never in the constructions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .model import SmoothnessClass
from .piecewise import PiecewisePolynomial

MAX_CHEBYSHEV_DEGREE = 30
MAX_SPLINE_DEGREE = 12


@dataclass(frozen=True)
class ChebyshevU:
    """Second-kind Chebyshev polynomial in the power basis."""

    degree: int
    coefficients: tuple[float, ...]

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coefficients)

    def zeros(self) -> np.ndarray:
        """The ``degree`` zeros ``cos(i pi / (degree+1))``, ascending."""
        n = self.degree
        i = np.arange(n, 0, -1)
        return np.cos(i * np.pi / (n + 1))


@lru_cache(maxsize=None)
def chebyshev_u(degree: int) -> ChebyshevU:
    """Power-basis U_degree via the recurrence U_{n+1} = 2x U_n - U_{n-1}."""
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    if degree > MAX_CHEBYSHEV_DEGREE:
        raise ValueError(
            f"degree {degree} > {MAX_CHEBYSHEV_DEGREE}: power-basis coefficients "
            "would overflow the exact-integer range of doubles"
        )
    prev = np.array([1.0])
    if degree == 0:
        return ChebyshevU(0, (1.0,))
    cur = np.array([0.0, 2.0])
    for _ in range(degree - 1):
        nxt = np.zeros(cur.size + 1)
        nxt[1:] = 2.0 * cur
        nxt[: prev.size] -= prev
        prev, cur = cur, nxt
    return ChebyshevU(degree, tuple(cur))


@dataclass(frozen=True)
class SignPattern:
    """The sign of ``U_n`` between its zeros, +1 on the rightmost interval.

    ``knots`` are the zeros, ``leading_sign`` the sign on the leftmost
    interval; signs alternate from there.
    """

    knots: tuple[float, ...]
    leading_sign: int

    @property
    def num_intervals(self) -> int:
        return len(self.knots) + 1

    @property
    def signs(self) -> np.ndarray:
        s = self.leading_sign * (-1.0) ** np.arange(self.num_intervals)
        return s

    @property
    def boundaries(self) -> np.ndarray:
        return np.concatenate(([-1.0], np.asarray(self.knots), [1.0]))

    def moment(self, p: int) -> float:
        """Exact ``int_{-1}^{1} t^p sgn U_n(t) dt`` by piecewise antiderivatives."""
        t = self.boundaries
        upper = t[1:] ** (p + 1)
        lower = t[:-1] ** (p + 1)
        return float(np.sum(self.signs * (upper - lower)) / (p + 1))

    def weighted_one_minus_t_integral(self, p: int) -> float:
        """Exact ``int_{-1}^{1} (1 - t)^p sgn U_n(t) dt``."""
        t = self.boundaries
        vals = (1.0 - t) ** (p + 1)
        return float(np.sum(self.signs * (vals[:-1] - vals[1:])) / (p + 1))

    def max_moment_residual(self, pmax: int) -> float:
        return max(abs(self.moment(p)) for p in range(pmax + 1))

    def as_step(self) -> PiecewisePolynomial:
        return PiecewisePolynomial.from_step(self.boundaries, self.signs)


@lru_cache(maxsize=None)
def _pattern_for_degree(n: int) -> SignPattern:
    """Sign pattern of U_n.  Rightmost sign is +1 since U_n(1) = n + 1 > 0."""
    if n < 1:
        raise ValueError("degree must be >= 1")
    knots = chebyshev_u(n).zeros()
    leading = 1 if n % 2 == 0 else -1
    return SignPattern(tuple(float(z) for z in knots), leading)


def sign_pattern(r: int) -> SignPattern:
    """Sign pattern used by bumps of smoothness ``r``: the one of U_{r+1}."""
    if r < 1:
        raise ValueError("r must be >= 1")
    return _pattern_for_degree(r + 1)


@dataclass(frozen=True)
class PerfectBSpline:
    """Degree-n perfect B-spline on [-1, 1] with its derivative sup norms.

    ``sup_norms[j]`` is the exact max of the j-th derivative's absolute value
    over [-1, 1], computed from per-piece critical points.
    """

    degree: int
    body: PiecewisePolynomial
    sup_norms: tuple[float, ...]
    pattern: SignPattern = field(repr=False)


@lru_cache(maxsize=None)
def build_perfect_bspline(degree: int) -> PerfectBSpline:
    """Materialize the spline as the degree-fold antiderivative of the sign step.

    Starting the antiderivatives at -1 with zero constants reproduces the
    truncated-power integral representation exactly: all derivatives of order
    below ``degree`` vanish at -1, and the sign pattern's vanishing moments
    make them vanish at +1 as well.
    """
    if not 1 <= degree <= MAX_SPLINE_DEGREE:
        raise ValueError(f"degree must be in [1, {MAX_SPLINE_DEGREE}]")
    pattern = _pattern_for_degree(degree)
    body = pattern.as_step().antiderivative(degree)
    norms = tuple(body.derivative(j).sup_norm() for j in range(degree + 1))
    return PerfectBSpline(degree, body, norms, pattern)


def sup_norm_of_derivative(s: PerfectBSpline, j: int) -> float:
    """Exact sup of ``|psi^(j)|`` over [-1, 1] (critical points, not a grid)."""
    if not 0 <= j <= s.degree:
        raise ValueError("derivative order out of range")
    return s.body.derivative(j).sup_norm()


@dataclass(frozen=True)
class ScaledBump:
    """Affine copy of the degree r+1 spline on [c, d], scaled into a class.

    The gain ``alpha * ((d - c) / 2)^r`` with ``alpha = min_j D_j / m_j``
    makes every derivative up to order r obey the class bounds as long as
    ``d - c < 2``; all of them vanish at both endpoints.  Extension by zero
    outside [c, d] is built into the piecewise evaluation.
    """

    interval: tuple[float, float]
    alpha: float
    r: int
    body: PiecewisePolynomial

    def __call__(self, x):
        return self.body(x)

    def translated(self, dx: float) -> "ScaledBump":
        c, d = self.interval
        return ScaledBump((c + dx, d + dx), self.alpha, self.r, self.body.translated(dx))


def bump_gain(smoothness: SmoothnessClass) -> float:
    """``alpha = min_j D_j / m_j`` for the degree r+1 spline."""
    spline = build_perfect_bspline(smoothness.r + 1)
    norms = np.asarray(spline.sup_norms[: smoothness.r + 1])
    return float(np.min(smoothness.bounds / norms))


def build_scaled_bump(c: float, d: float, smoothness: SmoothnessClass) -> ScaledBump:
    if not c < d:
        raise ValueError("need c < d")
    if d - c >= 2.0:
        raise ValueError("cell width must be < 2 for class membership")
    r = smoothness.r
    spline = build_perfect_bspline(r + 1)
    alpha = bump_gain(smoothness)
    gain = alpha * ((d - c) / 2.0) ** r
    return ScaledBump((c, d), alpha, r, spline.body.mapped_to(c, d, gain))


@dataclass(frozen=True)
class IteratedIntegralConstant:
    """Constant ``v`` with m-fold cell integral of a bump = ``width^(r+m) v``."""

    r: int
    m: int
    value: float


def iterated_integral_constant(r: int, m: int, alpha: float) -> IteratedIntegralConstant:
    """Exact per-cell constant from the sign pattern's (1 - t)-power integral.

    ``v = (1/2)^(r+m) * alpha / (r+m)! * int (1-t)^(r+m) sgn U_{r+1}(t) dt``,
    evaluated by exact antiderivatives so the only error is roundoff.
    """
    if r < 1 or m < 1:
        raise ValueError("need r >= 1 and m >= 1")
    pattern = _pattern_for_degree(r + 1)
    raw = pattern.weighted_one_minus_t_integral(r + m)
    value = 0.5 ** (r + m) * alpha / math.factorial(r + m) * raw
    return IteratedIntegralConstant(r, m, value)


@dataclass(frozen=True)
class BumpFamily:
    """n translated bumps on the uniform grid of ``smoothness.interval``.

    Bump ``i`` is supported on ``[anchors[i], anchors[i+1]]`` alone; the
    supports are disjoint, so any weighted combination with weights in
    [-1, 1] stays inside the class.
    """

    n: int
    h: float
    anchors: tuple[float, ...]
    bumps: tuple[ScaledBump, ...]
    smoothness: SmoothnessClass
    alpha: float

    def integral_constant(self, m: int) -> float:
        return iterated_integral_constant(self.smoothness.r, m, self.alpha).value


def build_bump_family(smoothness: SmoothnessClass, n: int) -> BumpFamily:
    if n < 1:
        raise ValueError("n must be >= 1")
    a, b = smoothness.interval
    h = (b - a) / n
    if h >= 2.0:
        raise ValueError("cell width (b - a) / n must be < 2")
    anchors = a + h * np.arange(n + 1)
    prototype = build_scaled_bump(a, a + h, smoothness)
    bumps = tuple(prototype.translated(i * h) for i in range(n))
    return BumpFamily(
        n, h, tuple(float(t) for t in anchors), bumps, smoothness, prototype.alpha
    )


def bump_kfold_integral(family: BumpFamily, i: int, k: int) -> float:
    """Closed-form k-fold integral of bump ``i`` over the whole interval.

    ``h^(r+k) * sum_{m=1}^{k} v_m (n - i - 1)^(k-m) / (k-m)!`` where ``v_m``
    are the per-cell constants; the powers of ``n - i - 1`` count how far the
    bump's cell sits from the right endpoint.
    """
    if not 0 <= i < family.n:
        raise ValueError("bump index out of range")
    if k < 1:
        raise ValueError("k must be >= 1")
    r = family.smoothness.r
    dist = float(family.n - i - 1)
    total = 0.0
    for m in range(1, k + 1):
        total += family.integral_constant(m) * dist ** (k - m) / math.factorial(k - m)
    return family.h ** (r + k) * total


def family_kfold_integrals(family: BumpFamily, k: int) -> np.ndarray:
    """Vector of the closed-form k-fold integrals of all n bumps at once."""
    if k < 1:
        raise ValueError("k must be >= 1")
    r = family.smoothness.r
    dist = (family.n - 1 - np.arange(family.n)).astype(float)
    total = np.zeros(family.n)
    for m in range(1, k + 1):
        total += family.integral_constant(m) / math.factorial(k - m) * dist ** (k - m)
    return family.h ** (r + k) * total


def bump_partial_kfold_integral(family: BumpFamily, i: int, k: int, x: float) -> float:
    """k-fold integral of bump ``i`` from the left endpoint up to ``x``.

    Three regimes: identically zero left of the bump's cell; the local
    nested integral inside the cell (read off the bump's exact k-fold
    antiderivative); and, right of the cell, a polynomial in ``x - cell_end``
    assembled from the per-cell constants.
    """
    a, b = family.smoothness.interval
    if not a <= x <= b:
        raise ValueError(f"x={x} outside [{a}, {b}]")
    if k < 1:
        raise ValueError("k must be >= 1")
    lo = family.anchors[i]
    hi = family.anchors[i + 1]
    if x < lo:
        return 0.0
    if x <= hi:
        return float(family.bumps[i].body.antiderivative(k)(x))
    r = family.smoothness.r
    total = 0.0
    for m in range(1, k + 1):
        total += (
            family.h ** (r + m)
            * family.integral_constant(m)
            * (x - hi) ** (k - m)
            / math.factorial(k - m)
        )
    return total


def assemble_weighted(family: BumpFamily, weights) -> PiecewisePolynomial:
    """``sum_i weights[i] * bump_i`` on the full interval as one piecewise poly.

    Cells keep the bump's internal knot structure (with zero rows where the
    weight vanishes), so derivatives and antiderivatives of the assembly stay
    exact.
    """
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (family.n,):
        raise ValueError("need one weight per bump")
    proto = family.bumps[0].body
    pieces_per_cell = proto.num_pieces
    local_bp = proto.breakpoints - proto.breakpoints[0]  # offsets within a cell
    bp = np.concatenate(
        [[family.anchors[0]]]
        + [family.anchors[i] + local_bp[1:] for i in range(family.n)]
    )
    bp[-1] = family.anchors[-1]
    coeffs = np.vstack([w * proto.coeffs for w in weights])
    assert coeffs.shape[0] == family.n * pieces_per_cell
    return PiecewisePolynomial(bp, coeffs)
