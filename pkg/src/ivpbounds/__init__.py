"""Perfect B-spline bump machinery for k-fold integration experiments.

The package builds, with exact piecewise-polynomial arithmetic, the bump
families whose iterated integrals have closed forms; reduces k approximate
integral values to a mean estimate through a Vandermonde weight collapse;
and measures, with deterministic and control-variate Monte Carlo
integrators, the convergence exponents that separate the two settings.
"""

from .bspline import (
    BumpFamily,
    ChebyshevU,
    IteratedIntegralConstant,
    PerfectBSpline,
    ScaledBump,
    SignPattern,
    assemble_weighted,
    build_bump_family,
    build_perfect_bspline,
    build_scaled_bump,
    bump_gain,
    bump_kfold_integral,
    bump_partial_kfold_integral,
    chebyshev_u,
    family_kfold_integrals,
    iterated_integral_constant,
    sign_pattern,
    sup_norm_of_derivative,
)
from .harness import (
    AdversaryReport,
    ConvergenceTable,
    ExperimentSpec,
    RateFit,
    SuiteReport,
    default_rate_integrand,
    emit,
    fit_rate,
    run_adversary_pipeline,
    run_rate_experiment,
    run_verification_suite,
)
from .model import (
    CostCounter,
    FirstOrderSystem,
    OracleConvergenceError,
    PureTimeRHS,
    ScalarIVP,
    SmoothnessClass,
    SolutionApproximation,
    kfold_integral_oracle,
    polynomial_part,
    pure_time_ivp,
    sup_error,
    to_first_order_system,
    unit_class,
)
from .piecewise import PiecewisePolynomial
from .reduction import (
    MeanInstance,
    RecoveredMean,
    ReductionPlan,
    ShiftPlan,
    WeightVector,
    assemble_adversarial_rhs,
    build_reduction_plan,
    build_shift_plan,
    exact_integrals,
    lower_bound_queries,
    median_amplify,
    recover_mean,
    solve_weights,
    suggest_n,
    verify_weight_identities,
)
from .solvers import (
    SolverConfig,
    SolverResult,
    deterministic_kfold_solver,
    randomized_cv_solver,
    rk4_reference_solver,
)

__version__ = "0.1.0"
