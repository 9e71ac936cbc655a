"""Conservative flux-difference discretization and the monotone iteration.

The operator is discretized per axis by two-point difference quotients on
cell faces (conservative form), the inner linearized problems are strictly
convex box-constrained energy minimizations solved by projected gradient
descent (Barzilai-Borwein steplength with monotone Armijo backtracking),
and the outer loop is the classical monotone scheme iterating up from the
subsolution.  A lambda ladder scan brackets the existence threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .domain import Grid, GridField, Problem, OUT_OF_THEOREM, SUBLINEAR
from .errors import NonconvergenceError, RegimeError
from . import barriers as _barriers

DEFAULT_REG = 1e-8


def flux(g, p: float, reg: float = 0.0):
    """(g^2 + reg^2)^((p-2)/2) * g; exact monotone flux for reg = 0.

    Odd and nondecreasing in g; the g = 0 singularity for p < 2 with
    reg = 0 is resolved to flux = 0.
    """
    g = np.asarray(g, dtype=float)
    if p == 2.0:
        out = g.copy()
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (g * g + reg * reg) ** (0.5 * (p - 2.0)) * g
        out = np.where(g == 0.0, np.where(reg == 0.0, 0.0, out), out)
        out = np.nan_to_num(out, nan=0.0, posinf=0.0, neginf=0.0) if reg == 0.0 and p < 2.0 else out
    return out if out.ndim else float(out)


def _face_diffs(values: np.ndarray, grid: Grid, ax: int) -> np.ndarray:
    return np.diff(values, axis=ax) / grid.h[ax]


def apply_operator(u: GridField, prob: Problem, reg: float = 0.0) -> GridField:
    """-sum_i d_i(flux(d_i u)) in conservative flux-difference form; boundary
    nodes of the output are zero."""
    grid = u.grid
    out = np.zeros(grid.shape)
    for ax in range(grid.dim):
        F = flux(_face_diffs(u.values, grid, ax), prob.p[ax], reg)
        inner = [slice(1, -1) if k == ax else slice(None) for k in range(grid.dim)]
        lead = [slice(1, None) if k == ax else slice(None) for k in range(grid.dim)]
        lag = [slice(None, -1) if k == ax else slice(None) for k in range(grid.dim)]
        out[tuple(inner)] -= (F[tuple(lead)] - F[tuple(lag)]) / grid.h[ax]
    out[grid.boundary_mask] = 0.0
    return GridField(grid, out)


@dataclass
class SolveReport:
    solution: GridField
    iterations: int
    residual_history: list
    energy_history: list
    sandwich_ok: bool
    positive_mass: float
    monotone_ok: bool = True
    collapsed: bool = False
    final_residual: float = math.nan

    def to_record(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual_history": [float(r) for r in self.residual_history],
            "energy_history": [float(e) for e in self.energy_history],
            "sandwich_ok": bool(self.sandwich_ok),
            "positive_mass": float(self.positive_mass),
            "monotone_ok": bool(self.monotone_ok),
            "collapsed": bool(self.collapsed),
            "final_residual": float(self.final_residual),
        }


class _EnergyModel:
    """Discrete energy sum_i (1/p_i) int |d_i u|^{p_i} - int rhs u with
    trapezoid node volumes and midpoint face quadrature."""

    def __init__(self, prob: Problem, grid: Grid, rhs: np.ndarray, reg: float):
        self.prob = prob
        self.grid = grid
        self.rhs = rhs
        self.reg = reg
        self.face_w = [
            grid.h[ax] * grid.transverse_face_weight(ax) for ax in range(grid.dim)
        ]
        self.node_vol = grid.node_volume
        self.interior = grid.interior_mask

    def energy(self, vals: np.ndarray) -> float:
        e = 0.0
        r2 = self.reg * self.reg
        for ax in range(self.grid.dim):
            p = self.prob.p[ax]
            D = _face_diffs(vals, self.grid, ax)
            e += np.sum((D * D + r2) ** (0.5 * p) * self.face_w[ax]) / p
        e -= np.sum(self.rhs * vals * self.node_vol)
        return float(e)

    def normalized_gradient(self, vals: np.ndarray) -> np.ndarray:
        """A_reg(u) - rhs at interior nodes (true gradient / node volume)."""
        g = np.zeros(self.grid.shape)
        for ax in range(self.grid.dim):
            F = flux(_face_diffs(vals, self.grid, ax), self.prob.p[ax], self.reg)
            inner = [slice(1, -1) if k == ax else slice(None) for k in range(self.grid.dim)]
            lead = [slice(1, None) if k == ax else slice(None) for k in range(self.grid.dim)]
            lag = [slice(None, -1) if k == ax else slice(None) for k in range(self.grid.dim)]
            g[tuple(inner)] -= (F[tuple(lead)] - F[tuple(lag)]) / self.grid.h[ax]
        g -= self.rhs
        g[~self.interior] = 0.0
        return g


def convex_subproblem(
    rhs: GridField,
    prob: Problem,
    grid: Grid,
    lower: GridField,
    upper: GridField,
    tol: float = 1e-8,
    reg: float = DEFAULT_REG,
    max_iter: int = 50000,
    init: Optional[GridField] = None,
    energy_trace: Optional[list] = None,
) -> GridField:
    """Minimize the discrete convex energy over [lower, upper] with Dirichlet
    zero boundary; stops when the projected-gradient max-norm <= tol."""
    if np.any(lower.values > upper.values + 1e-14):
        raise ValueError("lower bound exceeds upper bound")
    model = _EnergyModel(prob, grid, rhs.values, reg)
    interior = grid.interior_mask

    lo = lower.values
    hi = upper.values

    u = (init.values if init is not None else lower.values).copy()
    u = np.clip(u, lo, hi)
    u[~interior] = 0.0

    E = model.energy(u)
    if energy_trace is not None:
        energy_trace.append(E)
    g = model.normalized_gradient(u)
    t = min(grid.h) ** 2
    u_prev = None
    g_prev = None

    for it in range(max_iter):
        pg = u - np.clip(u - g, lo, hi)
        pg[~interior] = 0.0
        if float(np.max(np.abs(pg))) <= tol:
            return GridField(grid, u)

        if u_prev is not None:
            du = u - u_prev
            dg = g - g_prev
            denom = float(np.sum(du * dg))
            if denom > 0.0:
                t = float(np.sum(du * du)) / denom
            t = min(max(t, 1e-14), 1e14)

        accepted = False
        for _ in range(60):
            u_new = np.clip(u - t * g, lo, hi)
            u_new[~interior] = 0.0
            step = u_new - u
            E_new = model.energy(u_new)
            # Armijo with the true gradient = node_vol * normalized gradient
            slope = float(np.sum(model.node_vol * g * step))
            if E_new <= E + 1e-4 * slope + 1e-15 * max(1.0, abs(E)):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # line search stalled at machine precision: treat as converged
            # if the projected gradient is already small
            pg = u - np.clip(u - g, lo, hi)
            pg[~interior] = 0.0
            res = float(np.max(np.abs(pg)))
            if res <= 100.0 * tol:
                return GridField(grid, u)
            raise NonconvergenceError(
                f"line search failed at iteration {it} (pg norm {res:.3e})",
                history=energy_trace,
            )

        u_prev, g_prev = u, g
        u, E = u_new, E_new
        if energy_trace is not None:
            energy_trace.append(E)
        g = model.normalized_gradient(u)

    pg = u - np.clip(u - g, lo, hi)
    raise NonconvergenceError(
        f"convex subproblem: {max_iter} iterations exhausted "
        f"(pg norm {float(np.max(np.abs(pg))):.3e})",
        history=energy_trace,
    )


def weak_residual_norm(u: GridField, prob: Problem) -> float:
    """Unregularized max-norm of A(u) - lambda u_+^{q-1} over interior nodes."""
    rhs = prob.lam * np.clip(u.values, 0.0, None) ** (prob.q - 1.0)
    res = apply_operator(u, prob, reg=0.0).values - rhs
    return float(np.max(np.abs(res[u.grid.interior_mask])))


def monotone_iterate(
    prob: Problem,
    grid: Grid,
    lower: GridField,
    upper: GridField,
    tol: float = 1e-4,
    max_outer: int = 200,
    reg: float = DEFAULT_REG,
    inner_tol: Optional[float] = None,
) -> SolveReport:
    """Iterate u^{k+1} = argmin of the convex energy with rhs
    lambda (u^k)_+^{q-1} over [u^k, upper], starting from the subsolution.

    The box constraint enforces the sandwich and outer monotonicity a
    priori; convergence is declared when both the outer step and the
    unregularized weak residual fall below tol.
    """
    if np.any(lower.values > upper.values + 1e-12):
        raise ValueError("lower barrier exceeds upper barrier")
    inner_tol = inner_tol if inner_tol is not None else 0.1 * tol
    u = lower.copy()
    u.values[~grid.interior_mask] = 0.0
    residuals = []
    energies = []
    monotone_ok = True
    for k in range(max_outer):
        rhs = GridField(grid, prob.lam * np.clip(u.values, 0.0, None) ** (prob.q - 1.0))
        trace: list = []
        u_new = convex_subproblem(
            rhs, prob, grid,
            lower=u, upper=upper,
            tol=inner_tol, reg=reg, init=u, energy_trace=trace,
        )
        if np.any(u_new.values < u.values - 1e-12):
            monotone_ok = False
        step = float(np.max(np.abs(u_new.values - u.values)))
        res = weak_residual_norm(u_new, prob)
        residuals.append(res)
        energies.append(trace[-1] if trace else math.nan)
        u = u_new
        if step <= tol and res <= tol:
            sandwich_ok = bool(
                np.all(lower.values <= u.values + 1e-12)
                and np.all(u.values <= upper.values + 1e-12)
            )
            return SolveReport(
                solution=u,
                iterations=k + 1,
                residual_history=residuals,
                energy_history=energies,
                sandwich_ok=sandwich_ok,
                positive_mass=float(np.max(u.values)),
                monotone_ok=monotone_ok,
                final_residual=res,
            )
    report = SolveReport(
        solution=u,
        iterations=max_outer,
        residual_history=residuals,
        energy_history=energies,
        sandwich_ok=False,
        positive_mass=float(np.max(u.values)),
        monotone_ok=monotone_ok,
        final_residual=residuals[-1] if residuals else math.nan,
    )
    raise NonconvergenceError(
        f"monotone iteration: no convergence in {max_outer} outer steps",
        report=report,
    )


def picard_iterate(
    prob: Problem,
    grid: Grid,
    init: GridField,
    upper: GridField,
    tol: float = 1e-4,
    max_outer: int = 400,
    reg: float = DEFAULT_REG,
    mass_floor: float = 0.0,
    inner_tol: Optional[float] = None,
) -> SolveReport:
    """Diagnostic fixed-point iteration with bounds [0, upper] from a generic
    seed; used when no certified subsolution is available.  Stops early with
    collapsed=True once the iterate mass falls below mass_floor."""
    inner_tol = inner_tol if inner_tol is not None else 0.1 * tol
    zero = GridField.zeros(grid)
    u = init.copy()
    u.values[:] = np.clip(u.values, 0.0, upper.values)
    u.values[~grid.interior_mask] = 0.0
    residuals = []
    energies = []
    for k in range(max_outer):
        rhs = GridField(grid, prob.lam * np.clip(u.values, 0.0, None) ** (prob.q - 1.0))
        trace: list = []
        u_new = convex_subproblem(
            rhs, prob, grid, lower=zero, upper=upper,
            tol=inner_tol, reg=reg, init=u, energy_trace=trace,
        )
        step = float(np.max(np.abs(u_new.values - u.values)))
        res = weak_residual_norm(u_new, prob)
        residuals.append(res)
        energies.append(trace[-1] if trace else math.nan)
        u = u_new
        mass = float(np.max(u.values))
        if mass < mass_floor:
            return SolveReport(
                solution=u, iterations=k + 1,
                residual_history=residuals, energy_history=energies,
                sandwich_ok=True, positive_mass=mass,
                collapsed=True, final_residual=res,
            )
        # scale-relative stopping: a slowly decaying near-zero iterate has a
        # tiny absolute step and residual, but is not a fixed point at its
        # own scale, so keep iterating until it collapses or stabilizes
        scale = min(max(mass, tol), 1.0)
        if step <= tol * scale and res <= tol * scale:
            return SolveReport(
                solution=u, iterations=k + 1,
                residual_history=residuals, energy_history=energies,
                sandwich_ok=True, positive_mass=mass,
                collapsed=False, final_residual=res,
            )
    return SolveReport(
        solution=u, iterations=max_outer,
        residual_history=residuals, energy_history=energies,
        sandwich_ok=True, positive_mass=float(np.max(u.values)),
        collapsed=False, final_residual=residuals[-1] if residuals else math.nan,
    )


@dataclass
class LadderPoint:
    lam: float
    classified: str  # "solution" | "no-solution"
    positive_mass: float
    residual: float
    route: str  # "barrier" | "warm" | "fallback"
    outer_iterations: int

    def to_record(self) -> dict:
        return {
            "lambda": self.lam,
            "classified": self.classified,
            "positive_mass": self.positive_mass,
            "residual": self.residual,
            "route": self.route,
            "outer_iterations": self.outer_iterations,
        }


@dataclass
class ScanResult:
    points: list
    bracket_lo: Optional[float]  # largest failing lambda (None if none fail)
    bracket_hi: Optional[float]  # smallest succeeding lambda (None if none succeed)
    mass_floor: float

    def to_record(self) -> dict:
        return {
            "points": [pt.to_record() for pt in self.points],
            "bracket": [self.bracket_lo, self.bracket_hi],
            "mass_floor": self.mass_floor,
        }


def _seed_field(grid: Grid, amplitude: float) -> GridField:
    """Tensor bump of unit max scaled by ``amplitude``."""
    vals = np.ones(grid.shape)
    for ax in range(grid.dim):
        iv = grid.box.intervals[ax]
        x = grid.coords[ax]
        bump = 4.0 * (x - iv.a) * (iv.b - x) / iv.length**2
        sh = [1] * grid.dim
        sh[ax] = -1
        vals = vals * bump.reshape(sh)
    return GridField(grid, amplitude * vals)


def _try_barrier_pair(prob: Problem, lam: float, grid_resolution=None):
    """Admissible (spec, eps, M) for lambda, or None when the recipe fails."""
    try:
        spec = _barriers.default_spec(prob)
    except RegimeError:
        return None
    delta = _barriers.certify_delta(spec, prob)
    spec = _replace_spec(spec, delta=delta)
    if prob.regime == SUBLINEAR:
        try:
            eps = _barriers.epsilon_for_lambda(prob, spec, lam, grid_resolution)
        except Exception:
            return None
        return _replace_spec(spec, eps=eps)
    # intermediate: scan an eps ladder for lambda_star_sub <= lambda
    for eps in [2.0 ** (-k) for k in range(0, 14)]:
        trial = _replace_spec(spec, eps=eps)
        if _barriers.lambda_star_sub(trial, prob, grid_resolution) <= lam:
            return trial
    return None


def _replace_spec(spec, **kw):
    from dataclasses import replace as _dc_replace

    return _dc_replace(spec, **kw)


def lambda_scan(
    prob_template: Problem,
    grid: Grid,
    lambda_lo: float,
    lambda_hi: float,
    steps: int,
    tol: float = 1e-4,
    max_outer: int = 400,
    reg: float = DEFAULT_REG,
    mass_floor: Optional[float] = None,
    seed_amplitude: float = 1e-3,
    allow_sublinear: bool = True,
) -> ScanResult:
    """Classify each lambda on a geometric ladder as possessing a positive
    solution or not, and bracket the existence threshold.

    The barrier route (certified sub/supersolution + monotone iteration) is
    attempted first; once some lambda succeeds, larger ladder points are
    warm-started with the previous solution as the new subsolution.  Where
    no certified subsolution exists, a diagnostic fixed-point iteration from
    a small seed classifies by mass collapse versus persistence.
    """
    if lambda_lo >= lambda_hi:
        raise ValueError("lambda_lo must be below lambda_hi")
    if lambda_lo <= 0.0:
        raise ValueError("the ladder requires positive lambda")
    if prob_template.regime == SUBLINEAR and not allow_sublinear:
        raise RegimeError("sublinear scan is diagnostic only")
    if mass_floor is None:
        mass_floor = 0.1 * seed_amplitude

    lambdas = np.geomspace(lambda_lo, lambda_hi, steps)
    points = []
    warm_solution: Optional[GridField] = None

    for lam in lambdas:
        prob = prob_template.with_lambda(float(lam))
        point = None
        if warm_solution is not None and prob.q < prob.p[-1]:
            # previous solution solves the equation at a smaller lambda, so
            # it is a subsolution here; reuse it as the new lower barrier
            spec = _barriers.default_spec(prob)
            M = _barriers.m_for_lambda(prob, spec, lam, floor=warm_solution)
            upper = _barriers.sample_to_grid(
                _barriers.build_barrier("super", _replace_spec(spec, M=M), prob), grid
            )
            try:
                rep = monotone_iterate(
                    prob, grid, lower=warm_solution, upper=upper,
                    tol=tol, max_outer=max_outer, reg=reg,
                )
                point = LadderPoint(
                    lam=float(lam), classified="solution",
                    positive_mass=rep.positive_mass, residual=rep.final_residual,
                    route="warm", outer_iterations=rep.iterations,
                )
                warm_solution = rep.solution
            except NonconvergenceError:
                point = None
        if point is None:
            pair = _try_barrier_pair(prob, float(lam))
            if pair is not None:
                sub_bf = _barriers.build_barrier("sub", pair, prob)
                lower = _barriers.sample_to_grid(sub_bf, grid)
                M = _barriers.m_for_lambda(prob, pair, lam, floor=lower)
                upper = _barriers.sample_to_grid(
                    _barriers.build_barrier("super", _replace_spec(pair, M=M), prob),
                    grid,
                )
                try:
                    rep = monotone_iterate(
                        prob, grid, lower=lower, upper=upper,
                        tol=tol, max_outer=max_outer, reg=reg,
                    )
                    classified = (
                        "solution"
                        if rep.positive_mass >= 10.0 * tol and rep.final_residual <= tol
                        else "no-solution"
                    )
                    point = LadderPoint(
                        lam=float(lam), classified=classified,
                        positive_mass=rep.positive_mass, residual=rep.final_residual,
                        route="barrier", outer_iterations=rep.iterations,
                    )
                    if classified == "solution":
                        warm_solution = rep.solution
                except NonconvergenceError as exc:
                    rep = exc.report
                    point = LadderPoint(
                        lam=float(lam), classified="no-solution",
                        positive_mass=rep.positive_mass if rep else math.nan,
                        residual=rep.final_residual if rep else math.nan,
                        route="barrier", outer_iterations=rep.iterations if rep else -1,
                    )
            else:
                # no certified subsolution: diagnostic fixed-point iteration
                upper = _fallback_cap(prob, grid)
                seed = _seed_field(grid, seed_amplitude)
                rep = picard_iterate(
                    prob, grid, init=seed, upper=upper,
                    tol=tol, max_outer=max_outer, reg=reg, mass_floor=mass_floor,
                )
                collapsed = rep.collapsed or rep.positive_mass < mass_floor
                point = LadderPoint(
                    lam=float(lam),
                    classified="no-solution" if collapsed else "solution",
                    positive_mass=rep.positive_mass, residual=rep.final_residual,
                    route="fallback", outer_iterations=rep.iterations,
                )
                if not collapsed and rep.final_residual <= tol:
                    warm_solution = rep.solution
        points.append(point)

    failing = [pt.lam for pt in points if pt.classified == "no-solution"]
    succeeding = [pt.lam for pt in points if pt.classified == "solution"]
    return ScanResult(
        points=points,
        bracket_lo=max(failing) if failing else None,
        bracket_hi=min(succeeding) if succeeding else None,
        mass_floor=mass_floor,
    )


def _fallback_cap(prob: Problem, grid: Grid) -> GridField:
    """Upper bound for the diagnostic iteration: a supersolution barrier when
    the regime admits one, else a large constant cap."""
    if prob.q < prob.p[-1]:
        spec = _barriers.default_spec(prob)
        M = _barriers.m_for_lambda(prob, spec, prob.lam)
        bf = _barriers.build_barrier("super", _replace_spec(spec, M=M), prob)
        return _barriers.sample_to_grid(bf, grid)
    return GridField(grid, np.full(grid.shape, 1e6))
