"""Hiding kn numbers in k integration problems and recovering their mean.

Take kn numbers lambda_i in [-1, 1].  Spread them over a 2kn-cell bump
family k times, each copy shifted n cells relative to the previous one.
Each copy defines a right-hand side whose k-fold integral mixes the lambdas
with distance-dependent coefficients.  A fixed weight vector (solved from a
transpose Vandermonde system, independent of n) collapses the k integrals
into exactly the mean of the lambdas.  So whoever can integrate can estimate
means, and mean-estimation query bounds translate into integration bounds.
"""

import numpy as np

from ivpbounds import (
    MeanInstance,
    build_reduction_plan,
    exact_integrals,
    lower_bound_queries,
    recover_mean,
    solve_weights,
    suggest_n,
    unit_class,
    verify_weight_identities,
)

# The collapse weights depend only on k.  For k = 2 they are (-4, 4).

for k in (1, 2, 3, 4):
    w = solve_weights(k)
    print(f"k={k}: weights {np.round(w.weights, 6)}  (condition ~ {w.condition_estimate:.1e})")

# The identities they must satisfy, checked over every shifted cell.

plan = build_reduction_plan(3, 8, unit_class(1))
report = verify_weight_identities(plan)
print(
    f"\nk=3, n=8 identity residuals: mean-row {report.residual_mean_row:.2e}, "
    f"higher rows {report.residual_higher_rows:.2e} (scale {report.scale:.1f})"
)

# Round trip: with exact integrals the recovered mean is the true mean.

rng = np.random.default_rng(7)
lam = rng.uniform(-1.0, 1.0, 24)
inst = MeanInstance(tuple(lam))
integrals = exact_integrals(plan, inst)
rec = recover_mean(plan, integrals)
print(f"true mean {inst.mean:+.12f}  recovered {rec.estimate:+.12f}")

# With approximate integrals the error inflates by an explicit factor.

eps = 1e-6
rec = recover_mean(plan, integrals, epsilon_in=eps)
print(f"per-integral error {eps:.1e} -> mean error bound {rec.epsilon_out:.3e}")
print(f"inflation factor (kn)^r C sum|c_j| = {plan.inflation_factor():.3e}")

# Query-count bound arguments at that accuracy, both settings.

kn = plan.k * plan.n
for setting in ("rand", "quant"):
    print(
        f"{setting}: bound argument {lower_bound_queries(setting, kn, rec.epsilon_out)}"
        f" of kn = {kn}"
    )

# How large an instance a target accuracy calls for (order-only).

for eps_target in (1e-2, 1e-3, 1e-4):
    n_rand = suggest_n("rand", eps_target, k=3, smoothness=unit_class(1))
    n_quant = suggest_n("quant", eps_target, k=3, smoothness=unit_class(1))
    print(f"eps={eps_target:.0e}: suggested n rand={n_rand}, quant={n_quant}")
