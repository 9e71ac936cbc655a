"""Numerical toolkit for the orthotropic p-Laplacian eigenvalue-type problem
via explicit sub/supersolution barriers and monotone iteration."""

from .domain import Box, Grid, GridField, Interval, Problem
from .eigen1d import Eigenpair1D, check_slope_sign, eval_dv, eval_v, pi_p, solve_eigenpair
from .barriers import (
    BarrierFunction,
    BarrierSpec,
    build_barrier,
    certify_delta,
    default_alpha,
    default_spec,
    epsilon_for_lambda,
    lambda_star_sub,
    lambda_star_super,
    m_for_lambda,
    nonexistence_bound,
    pointwise_S,
    sample_to_grid,
)
from .pde_solver import (
    SolveReport,
    apply_operator,
    convex_subproblem,
    flux,
    lambda_scan,
    monotone_iterate,
    picard_iterate,
    weak_residual_norm,
)
from .verification import (
    poincare_check,
    sandwich_check,
    validate_problem,
    weak_inequality_check,
)

__version__ = "0.1.0"
