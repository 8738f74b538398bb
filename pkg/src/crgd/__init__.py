"""Curvature-regularized gradient dynamics.

Continuous-time optimizer dynamics that flow through strict saddle points at
a user-selected convergence rate, by augmenting the objective with a hinge
penalty on the most negative Hessian eigenvalue and enforcing exact Lyapunov
decay of the augmented cost.
"""

from .curvature import AugmentedEval, EigenPair, augmented_eval, eigmin, smf_wmin, spurious_quadform, wmin_generic
from .dynamics import (
    CrgdConfig,
    IntegrationError,
    SolverConfig,
    StatusKind,
    Trajectory,
    crgd_rhs,
    gd_rhs,
    integrate,
    is_sosp,
    run_crgd,
    run_gd,
)
from .laws import ConvergenceLaw, Exponential, FiniteTime, FixedTime, PrescribedTime, default_laws, law_from_name
from .objective import (
    MatFacParams,
    ObjectiveProblem,
    ThreeFoldParams,
    default_spectrum,
    fd_grad,
    fd_hess,
    matfac_problem,
    random_orthogonal_basis,
    threefold_critical_radii,
    threefold_problem,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentedEval",
    "ConvergenceLaw",
    "CrgdConfig",
    "EigenPair",
    "Exponential",
    "FiniteTime",
    "FixedTime",
    "IntegrationError",
    "MatFacParams",
    "ObjectiveProblem",
    "PrescribedTime",
    "SolverConfig",
    "StatusKind",
    "ThreeFoldParams",
    "Trajectory",
    "augmented_eval",
    "crgd_rhs",
    "default_laws",
    "default_spectrum",
    "eigmin",
    "fd_grad",
    "fd_hess",
    "gd_rhs",
    "integrate",
    "is_sosp",
    "law_from_name",
    "matfac_problem",
    "random_orthogonal_basis",
    "run_crgd",
    "run_gd",
    "smf_wmin",
    "spurious_quadform",
    "threefold_critical_radii",
    "threefold_problem",
    "wmin_generic",
]
