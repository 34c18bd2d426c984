"""Build perfect B-splines from the Chebyshev sign pattern.

The construction starts from the sign of the second-kind Chebyshev
polynomial between its zeros.  That step function has two properties worth
seeing with numbers: it alternates, and it integrates to zero against every
polynomial of low enough degree.  Antidifferentiating it n times produces a
spline supported exactly on [-1, 1] whose n-th derivative is +-1 almost
everywhere and whose derivatives all vanish at both endpoints.
"""

import numpy as np

from ivpbounds import build_perfect_bspline, chebyshev_u, sign_pattern

# The sign pattern for smoothness r uses U_{r+1}.  For r = 1 that is
# U_2 = 4x^2 - 1 with zeros at -1/2 and 1/2 and signs (+, -, +).

pattern = sign_pattern(1)
print("U_2 coefficients:", chebyshev_u(2).coefficients)
print("knots:", np.round(pattern.knots, 6))
print("interval signs:", pattern.signs)

# Vanishing moments: exact piecewise antiderivatives, no quadrature.

for r in range(1, 9):
    p = sign_pattern(r)
    print(f"r={r}: worst moment residual up to degree {r}: {p.max_moment_residual(r):.2e}")

# The degree-1 spline is |x| - 1; higher degrees are its smooth relatives.

psi1 = build_perfect_bspline(1)
xs = np.linspace(-1.0, 1.0, 9)
print("\npsi_1 values   :", np.round(psi1.body(xs), 6))
print("|x| - 1 values :", np.round(np.abs(xs) - 1.0, 6))

# Endpoint flatness: every derivative up to degree - 1 vanishes at -1, and
# the vanishing moments force the same at +1 for the bump degree r + 1.

for degree in (2, 3, 4):
    s = build_perfect_bspline(degree)
    left = max(abs(s.body.derivative(j)(-1.0)) for j in range(degree))
    right = max(abs(s.body.derivative(j)(1.0)) for j in range(degree))
    print(f"degree {degree}: endpoint derivative magnitudes {left:.2e} / {right:.2e}")

# Derivative sup norms enter every scaling constant downstream; the top one
# is exactly 1 because the top derivative is the sign pattern itself.

s = build_perfect_bspline(4)
print("\ndegree-4 sup norms m_0..m_4:", [f"{m:.6f}" for m in s.sup_norms])

# Piecewise-polynomial bodies export to CSV for external plotting.

s.body.to_csv("/tmp/perfect_bspline_degree4.csv")
print("wrote /tmp/perfect_bspline_degree4.csv")
