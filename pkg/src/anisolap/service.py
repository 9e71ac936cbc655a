"""Service layer wiring the request schemas to the numerical modules.

Both the FastAPI app and the CLI (in its in-process mode) call these
functions; errors propagate as the toolkit's typed exceptions and are
mapped to HTTP codes / exit codes by the respective frontends.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import barriers as _barriers
from . import pde_solver as _solver
from . import verification as _verif
from .domain import Box, Grid, GridField, Problem, SUBLINEAR
from .eigen1d import pi_p, solve_eigenpair
from .errors import InvalidExponentError, RegimeError
from .schemas import (
    BarrierSummary,
    BoxSchema,
    CheckSummary,
    EigenRequest,
    EigenResponse,
    MeshPoint,
    ScanRequest,
    ScanResponse,
    SolveConfig,
    SolveResponse,
    ValidateResponse,
)
from .domain import Interval


def run_eigen1d(req: EigenRequest) -> EigenResponse:
    pair = solve_eigenpair(req.p, Interval(req.a, req.b), tol=req.tol)
    pp = pi_p(req.p)
    L = req.b - req.a
    return EigenResponse(
        p=req.p,
        a=req.a,
        b=req.b,
        eta=pair.eta,
        pi_p=pp,
        eta_from_pi_p=(req.p - 1.0) * (pp / L) ** req.p,
        endpoint_residual=pair.endpoint_residual,
        mesh=[MeshPoint(x=float(x), v=float(v), dv=float(dv))
              for x, v, dv in zip(pair.xs, pair.vs, pair.dvs)],
    )


def problem_from_config(cfg: SolveConfig) -> Problem:
    omega = Box.from_bounds(cfg.omega.a, cfg.omega.b)
    return Problem(cfg.p, cfg.q, cfg.lam, omega)


def grid_from_config(cfg: SolveConfig) -> Grid:
    omega = Box.from_bounds(cfg.omega.a, cfg.omega.b)
    return Grid(omega, cfg.grid.n)


def run_validate(cfg: SolveConfig) -> ValidateResponse:
    diag = _verif.validate_problem(problem_from_config(cfg))
    return ValidateResponse(**diag.to_record())


def build_barrier_pair(prob: Problem, cfg: SolveConfig, lower_floor=None):
    """Barrier spec with config overrides, eps/M filled by the recipes."""
    opts = cfg.options
    spec = _barriers.default_spec(prob, alpha=opts.alpha)
    spec = replace(spec, delta=_barriers.certify_delta(spec, prob))

    if opts.eps is not None:
        eps = opts.eps
    elif prob.regime == SUBLINEAR:
        eps = _barriers.epsilon_for_lambda(prob, spec, prob.lam)
    else:
        eps = None
        for trial_eps in [2.0 ** (-k) for k in range(0, 14)]:
            if _barriers.lambda_star_sub(replace(spec, eps=trial_eps), prob) <= prob.lam:
                eps = trial_eps
                break
        if eps is None:
            raise RegimeError(
                f"lambda={prob.lam} is below the subsolution threshold of the "
                "default barrier recipe for this intermediate-regime problem"
            )
    spec = replace(spec, eps=eps)
    return spec


def run_solve(cfg: SolveConfig):
    """Full pipeline: validate -> barriers -> monotone iteration -> checks.

    Returns (SolveResponse, solution GridField, sub GridField, super GridField).
    """
    prob = problem_from_config(cfg)
    if prob.q >= prob.p[-1]:
        raise RegimeError(
            f"q={prob.q} >= p_N={prob.p[-1]}: outside the theorem's hypothesis"
        )
    grid = grid_from_config(cfg)
    opts = cfg.options

    spec = build_barrier_pair(prob, cfg)
    sub_bf = _barriers.build_barrier("sub", spec, prob)
    lower = _barriers.sample_to_grid(sub_bf, grid)
    M = opts.M if opts.M is not None else _barriers.m_for_lambda(
        prob, spec, prob.lam, floor=lower
    )
    spec = replace(spec, M=M)
    super_bf = _barriers.build_barrier("super", spec, prob)
    upper = _barriers.sample_to_grid(super_bf, grid)

    lam_sub = _barriers.lambda_star_sub(spec, prob)
    lam_super = _barriers.lambda_star_super(spec, prob)
    try:
        bound = _barriers.nonexistence_bound(prob)
    except RegimeError:
        bound = None

    report = _solver.monotone_iterate(
        prob, grid, lower=lower, upper=upper,
        tol=opts.tol, max_outer=opts.max_outer, reg=opts.reg,
    )

    checks = [
        _verif.weak_inequality_check(lower, prob, "sub", opts.check_tol),
        _verif.weak_inequality_check(upper, prob, "super", opts.check_tol),
        _verif.weak_inequality_check(report.solution, prob, "solution",
                                     max(opts.check_tol, 10.0 * opts.tol)),
    ]
    sandwich = _verif.sandwich_check(lower, report.solution, upper)
    lhs, rhs, pok = _verif.poincare_check(report.solution, prob.p[0], axis=0)

    all_ok = all(c.passed for c in checks) and sandwich.ok and pok and report.sandwich_ok

    resp = SolveResponse(
        regime=prob.regime,
        barrier=BarrierSummary(
            regime=prob.regime,
            eps=spec.eps,
            alpha=list(spec.alpha),
            M=spec.M,
            delta=spec.delta,
            lambda_star_sub=lam_sub,
            lambda_star_super=lam_super,
            nonexistence_bound=bound,
            inner=BoxSchema(a=[iv.a for iv in spec.inner.intervals],
                            b=[iv.b for iv in spec.inner.intervals]),
            outer=BoxSchema(a=[iv.a for iv in spec.outer.intervals],
                            b=[iv.b for iv in spec.outer.intervals]),
        ),
        report=report.to_record(),
        checks=[CheckSummary(**c.to_record()) for c in checks],
        sandwich=sandwich.to_record(),
        poincare={"r": prob.p[0], "axis": 0, "lhs": lhs, "rhs": rhs, "ok": pok},
        all_checks_passed=bool(all_ok),
    )
    return resp, report.solution, lower, upper


def run_lambda_scan(req: ScanRequest) -> ScanResponse:
    cfg = req.config
    prob = problem_from_config(cfg)
    grid = grid_from_config(cfg)
    opts = cfg.options
    result = _solver.lambda_scan(
        prob, grid, req.lo, req.hi, req.steps,
        tol=opts.tol, reg=opts.reg,
    )
    bound = None
    below = []
    if abs(prob.q - prob.p[0]) <= 1e-12:
        bound = _barriers.nonexistence_bound(prob)
        below = [pt.lam for pt in result.points
                 if pt.classified == "solution" and pt.lam < bound]
    rec = result.to_record()
    return ScanResponse(
        points=rec["points"],
        bracket=rec["bracket"],
        mass_floor=rec["mass_floor"],
        nonexistence_bound=bound,
        successes_below_bound=below,
    )
