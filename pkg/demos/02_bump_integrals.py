"""Scaled bumps, translated families, and their closed-form iterated integrals.

A bump is an affine copy of the degree r+1 perfect B-spline squeezed into a
cell and scaled so that all derivatives up to order r respect prescribed
bounds.  The payoff of the construction is that every m-fold iterated
integral of a bump has a closed form: width^(r+m) times a constant computed
from exact antiderivatives.  This script checks those closed forms against
brute-force adaptive quadrature.
"""

import numpy as np

from ivpbounds import (
    build_bump_family,
    build_scaled_bump,
    bump_kfold_integral,
    bump_partial_kfold_integral,
    iterated_integral_constant,
    kfold_integral_oracle,
    unit_class,
)

cls = unit_class(1)  # one continuous derivative, all bounds 1, on [0, 1]

# A single bump on [0, 1]: endpoint-flat and inside the class bounds.

bump = build_scaled_bump(0.0, 1.0, cls)
print("gain alpha:", bump.alpha)
grid = np.linspace(0.0, 1.0, 10_001)
for j in range(2):
    print(f"max |bump^({j})| on grid: {np.max(np.abs(bump.body.derivative(j)(grid))):.6f}")

# Closed form vs quadrature for the m-fold integral over the cell.

for m in (1, 2, 3):
    closed = iterated_integral_constant(1, m, bump.alpha).value  # width 1
    oracle = kfold_integral_oracle(
        bump.body, 0.0, 1.0, m, tol=1e-13, breakpoints=bump.body.breakpoints
    )
    print(f"m={m}: closed {closed: .12e}  quadrature {oracle: .12e}")

# A family of translated bumps: disjoint supports on a uniform grid.  The
# k-fold integral over the whole interval depends on how far the bump sits
# from the right endpoint; the formula collapses to one term for the last bump.

fam = build_bump_family(unit_class(2, (0.0, 2.0)), 4)
print("\nfamily anchors:", fam.anchors)
for i in range(4):
    closed = bump_kfold_integral(fam, i, 2)
    body = fam.bumps[i].body
    oracle = kfold_integral_oracle(body, 0.0, 2.0, 2, tol=1e-13, breakpoints=body.breakpoints)
    print(f"bump {i}: 2-fold integral {closed: .10e}  (quadrature {oracle: .10e})")

# The running k-fold integral has three regimes: zero before the cell, a
# local piecewise polynomial inside it, and a polynomial tail after it.

print("\nrunning 2-fold integral of bump 1:")
for x in (0.2, 0.6, 0.75, 1.4, 2.0):
    print(f"  x={x:4.2f}: {bump_partial_kfold_integral(fam, 1, 2, x): .10e}")
