"""Piecewise polynomials in a local power basis.

Piece ``i`` lives on ``[breakpoints[i], breakpoints[i+1]]`` and is stored as a
row of ascending coefficients in the local variable ``xi = x - breakpoints[i]``.
All calculus on these objects (derivatives, antiderivatives, definite
integrals, exact sup norms) is coefficient arithmetic, so identities built on
top of them are limited only by floating point, never by quadrature error.
"""

from __future__ import annotations

import csv

import numpy as np
from numpy.polynomial import polynomial as npoly


def _horner_rows(coeffs: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Evaluate row ``i`` of ``coeffs`` at ``xi[i]`` (ascending powers)."""
    out = np.array(coeffs[..., -1], dtype=float)
    for j in range(coeffs.shape[-1] - 2, -1, -1):
        out = out * xi + coeffs[..., j]
    return out


class PiecewisePolynomial:
    """A compactly supported piecewise polynomial.

    Evaluation outside ``[breakpoints[0], breakpoints[-1]]`` returns 0, which
    is the extension-by-zero convention every bump construction in this
    package relies on.
    """

    __slots__ = ("breakpoints", "coeffs")

    def __init__(self, breakpoints, coeffs):
        bp = np.ascontiguousarray(breakpoints, dtype=float)
        cf = np.atleast_2d(np.asarray(coeffs, dtype=float))
        if bp.ndim != 1 or bp.size < 2:
            raise ValueError("need at least two breakpoints")
        if np.any(np.diff(bp) <= 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        if cf.shape[0] != bp.size - 1:
            raise ValueError(
                f"{cf.shape[0]} coefficient rows for {bp.size - 1} pieces"
            )
        self.breakpoints = bp
        self.coeffs = np.ascontiguousarray(cf)

    # ------------------------------------------------------------------
    # basic queries
    # ------------------------------------------------------------------

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.breakpoints[0]), float(self.breakpoints[-1])

    @property
    def num_pieces(self) -> int:
        return self.coeffs.shape[0]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @classmethod
    def from_step(cls, breakpoints, values) -> "PiecewisePolynomial":
        """Step function: constant ``values[i]`` on piece ``i``."""
        values = np.asarray(values, dtype=float)
        return cls(breakpoints, values.reshape(-1, 1))

    @classmethod
    def zero(cls, breakpoints) -> "PiecewisePolynomial":
        bp = np.asarray(breakpoints, dtype=float)
        return cls(bp, np.zeros((bp.size - 1, 1)))

    # ------------------------------------------------------------------
    # evaluation
    # ------------------------------------------------------------------

    def piece_index(self, x: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        return np.clip(idx, 0, self.num_pieces - 1)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xv = np.atleast_1d(x)
        idx = self.piece_index(xv)
        xi = xv - self.breakpoints[idx]
        out = _horner_rows(self.coeffs[idx], xi)
        a, b = self.domain
        out = np.where((xv >= a) & (xv <= b), out, 0.0)
        return float(out[0]) if scalar else out

    # ------------------------------------------------------------------
    # calculus
    # ------------------------------------------------------------------

    def derivative(self, order: int = 1) -> "PiecewisePolynomial":
        if order < 0:
            raise ValueError("order must be nonnegative")
        cf = self.coeffs
        for _ in range(order):
            if cf.shape[1] == 1:
                cf = np.zeros((cf.shape[0], 1))
                continue
            cf = cf[:, 1:] * np.arange(1, cf.shape[1])
        return PiecewisePolynomial(self.breakpoints, cf)

    def antiderivative(self, order: int = 1) -> "PiecewisePolynomial":
        """Antiderivative vanishing (with all lower constants) at the left end."""
        if order < 0:
            raise ValueError("order must be nonnegative")
        cf = self.coeffs
        w = self.widths
        for _ in range(order):
            d = cf.shape[1]
            nxt = np.zeros((cf.shape[0], d + 1))
            nxt[:, 1:] = cf / np.arange(1, d + 1)
            # accumulate piece-end values so the result is continuous
            inc = _horner_rows(nxt, w)
            nxt[:, 0] = np.concatenate(([0.0], np.cumsum(inc)[:-1]))
            cf = nxt
        return PiecewisePolynomial(self.breakpoints, cf)

    def integrate(self, lo: float, hi: float) -> float:
        """Definite integral over ``[lo, hi]`` clipped to the domain."""
        a, b = self.domain
        lo, hi = max(lo, a), min(hi, b)
        if hi <= lo:
            return 0.0
        anti = self.antiderivative()
        return float(anti(hi) - anti(lo))

    # ------------------------------------------------------------------
    # norms and diagnostics
    # ------------------------------------------------------------------

    def sup_norm(self) -> float:
        """Exact max of ``|p|`` over the domain via per-piece critical points."""
        best = 0.0
        for i in range(self.num_pieces):
            c = self.coeffs[i]
            w = self.widths[i]
            cand = [0.0, w]
            dc = np.trim_zeros(npoly.polyder(c), "b")
            if dc.size >= 2:
                for root in npoly.polyroots(dc):
                    if abs(root.imag) < 1e-9 and 0.0 < root.real < w:
                        cand.append(root.real)
            vals = npoly.polyval(np.asarray(cand), c)
            best = max(best, float(np.max(np.abs(vals))))
        return best

    def continuity_defect(self) -> float:
        """Largest jump across an interior breakpoint (0 for C^0 data)."""
        if self.num_pieces == 1:
            return 0.0
        left = _horner_rows(self.coeffs[:-1], self.widths[:-1])
        right = self.coeffs[1:, 0]
        return float(np.max(np.abs(left - right)))

    # ------------------------------------------------------------------
    # transformations
    # ------------------------------------------------------------------

    def __mul__(self, scalar: float) -> "PiecewisePolynomial":
        return PiecewisePolynomial(self.breakpoints, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "PiecewisePolynomial":
        return self * -1.0

    def translated(self, dx: float) -> "PiecewisePolynomial":
        """Shift the graph right by ``dx``; local coefficients are unchanged."""
        return PiecewisePolynomial(self.breakpoints + dx, self.coeffs)

    def mapped_to(self, c: float, d: float, gain: float = 1.0) -> "PiecewisePolynomial":
        """Pull back through the affine map of ``[c, d]`` onto this domain.

        Returns ``q`` on ``[c, d]`` with ``q(x) = gain * p(u(x))`` where ``u``
        is the increasing affine bijection ``[c, d] -> [p_lo, p_hi]``.
        """
        if not d > c:
            raise ValueError("need c < d")
        p_lo, p_hi = self.domain
        sigma = (p_hi - p_lo) / (d - c)
        new_bp = c + (self.breakpoints - p_lo) / sigma
        new_bp[0], new_bp[-1] = c, d
        scale = gain * sigma ** np.arange(self.coeffs.shape[1])
        return PiecewisePolynomial(new_bp, self.coeffs * scale)

    def add_polynomial(self, coefs, center: float = 0.0) -> "PiecewisePolynomial":
        """Add the global polynomial ``sum_j coefs[j] (x - center)^j``."""
        coefs = np.asarray(coefs, dtype=float)
        d = max(self.coeffs.shape[1], coefs.size)
        cf = np.zeros((self.num_pieces, d))
        cf[:, : self.coeffs.shape[1]] = self.coeffs
        for i in range(self.num_pieces):
            loc = _shift_poly(coefs, self.breakpoints[i] - center)
            cf[i, : loc.size] += loc
        return PiecewisePolynomial(self.breakpoints, cf)

    # ------------------------------------------------------------------
    # export
    # ------------------------------------------------------------------

    def to_csv(self, path) -> None:
        """One row per piece: interval endpoints then local coefficients."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            deg = self.degree
            writer.writerow(["left", "right"] + [f"c{j}" for j in range(deg + 1)])
            for i in range(self.num_pieces):
                row = [repr(float(self.breakpoints[i])), repr(float(self.breakpoints[i + 1]))]
                row += [repr(float(v)) for v in self.coeffs[i]]
                writer.writerow(row)


def _shift_poly(coefs: np.ndarray, delta: float) -> np.ndarray:
    """Coefficients of ``p(xi + delta)`` given ascending ``coefs`` of ``p``."""
    out = np.array([coefs[-1]], dtype=float)
    for a in coefs[-2::-1]:  # Horner with the shifted variable
        out = npoly.polymul(out, np.array([delta, 1.0]))
        out[0] += a
    return out
