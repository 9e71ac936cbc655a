"""Independent audit layer: discrete weak inequality checks against nodal hat
test functions, sandwich ordering, the directional Poincare inequality and
problem-validity diagnostics.

The weak pairing here is assembled in summation-by-parts form (face fluxes
paired with hat gradients) on purpose: apart from the scalar flux map it
shares no code with the solver's divergence-form operator, so agreement of
the two is itself a meaningful check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .domain import Grid, GridField, Problem, INTERMEDIATE, OUT_OF_THEOREM, SUBLINEAR
from .errors import ContractError, InvalidExponentError
from .pde_solver import flux

BOUNDARY_TOL = 1e-12
POINCARE_SLACK = 1e-6


@dataclass
class WeakCheckReport:
    kind: str
    passed: bool
    worst: float           # signed worst violation of the inequality, normalized
    worst_nodes: list      # up to 10 (multi-index, coords, residual) entries
    tol: float

    def to_record(self) -> dict:
        return {
            "kind": self.kind,
            "passed": bool(self.passed),
            "worst": float(self.worst),
            "tol": float(self.tol),
            "worst_nodes": [
                {"index": list(idx), "x": list(x), "residual": float(r)}
                for idx, x, r in self.worst_nodes
            ],
        }


def _hat_pairing_residual(u: GridField, prob: Problem) -> np.ndarray:
    """R_j / node volume for every interior node j, where R_j pairs the face
    fluxes with the gradient of the nodal hat phi_j (midpoint face rule) and
    subtracts lambda (u_+)^{q-1} phi_j with trapezoid node volume."""
    grid = u.grid
    vol = np.prod(grid.h)
    R = np.zeros(grid.shape)
    for ax in range(grid.dim):
        D = np.diff(u.values, axis=ax) / grid.h[ax]
        F = flux(D, prob.p[ax], 0.0)
        # grad(phi_j) = +1/h on the left adjacent cell, -1/h on the right one;
        # transverse extent of the face through node j is prod_{k!=ax} h_k
        tvol = vol / grid.h[ax]
        inner = [slice(1, -1) if k == ax else slice(None) for k in range(grid.dim)]
        lead = [slice(1, None) if k == ax else slice(None) for k in range(grid.dim)]
        lag = [slice(None, -1) if k == ax else slice(None) for k in range(grid.dim)]
        R[tuple(inner)] += tvol * (F[tuple(lag)] - F[tuple(lead)])
    R -= prob.lam * np.clip(u.values, 0.0, None) ** (prob.q - 1.0) * vol
    return R / vol


def weak_inequality_check(
    u: GridField, prob: Problem, kind: str, tol: float
) -> WeakCheckReport:
    """Discrete weak sub/super/solution check against all interior hats.

    sub passes iff max R_j <= tol, super iff min R_j >= -tol, solution iff
    max |R_j| <= tol; residuals are normalized by the node volume.
    """
    if kind not in ("sub", "super", "solution"):
        raise ValueError(f"unknown check kind {kind!r}")
    grid = u.grid
    bvals = u.values[grid.boundary_mask]
    if kind in ("sub", "solution"):
        if float(np.max(np.abs(bvals))) > BOUNDARY_TOL:
            raise ContractError(f"{kind} check requires zero boundary values")
    else:
        if float(np.min(bvals)) < -BOUNDARY_TOL:
            raise ContractError("super check requires nonnegative boundary values")

    R = _hat_pairing_residual(u, prob)
    interior = grid.interior_mask
    Ri = R[interior]
    if kind == "sub":
        score = Ri
    elif kind == "super":
        score = -Ri
    else:
        score = np.abs(Ri)
    worst = float(np.max(score))
    passed = worst <= tol

    flat_idx = np.argsort(score.ravel())[::-1][:10]
    interior_indices = np.argwhere(interior)
    worst_nodes = []
    for fi in flat_idx:
        idx = tuple(int(v) for v in interior_indices[fi])
        x = tuple(grid.coords[k][idx[k]] for k in range(grid.dim))
        worst_nodes.append((idx, x, float(R[idx])))
    return WeakCheckReport(kind=kind, passed=passed, worst=worst,
                           worst_nodes=worst_nodes, tol=tol)


@dataclass
class SandwichReport:
    ok: bool
    worst_lower_gap: float   # max(lower - mid), positive means violation
    worst_upper_gap: float   # max(mid - upper)
    violating_node: Optional[tuple] = None

    def to_record(self) -> dict:
        return {
            "ok": bool(self.ok),
            "worst_lower_gap": float(self.worst_lower_gap),
            "worst_upper_gap": float(self.worst_upper_gap),
            "violating_node": list(self.violating_node) if self.violating_node else None,
        }


def sandwich_check(lower: GridField, mid: GridField, upper: GridField,
                   slack: float = 1e-12) -> SandwichReport:
    """Nodewise lower <= mid <= upper up to slack."""
    if lower.grid != mid.grid or mid.grid != upper.grid:
        raise ValueError("sandwich check requires a common grid")
    gap_lo = lower.values - mid.values
    gap_hi = mid.values - upper.values
    worst_lo = float(np.max(gap_lo))
    worst_hi = float(np.max(gap_hi))
    ok = worst_lo <= slack and worst_hi <= slack
    node = None
    if not ok:
        bad = gap_lo if worst_lo > worst_hi else gap_hi
        node = tuple(int(v) for v in np.unravel_index(np.argmax(bad), bad.shape))
    return SandwichReport(ok=ok, worst_lower_gap=worst_lo,
                          worst_upper_gap=worst_hi, violating_node=node)


def poincare_check(u: GridField, r: float, axis: int):
    """Directional inequality ||u||_r <= (d^i r / 2) ||d_i u||_r in discrete
    norms (trapezoid nodes, midpoint faces); returns (lhs, rhs, ok)."""
    if r < 1.0:
        raise InvalidExponentError(f"poincare_check requires r >= 1, got {r}")
    grid = u.grid
    if float(np.max(np.abs(u.values[grid.boundary_mask]))) > BOUNDARY_TOL:
        raise ContractError("poincare_check requires zero boundary values")
    lhs = float(np.sum(np.abs(u.values) ** r * grid.node_volume) ** (1.0 / r))
    D = np.diff(u.values, axis=axis) / grid.h[axis]
    face_w = grid.h[axis] * grid.transverse_face_weight(axis)
    dnorm = float(np.sum(np.abs(D) ** r * face_w) ** (1.0 / r))
    d_i = grid.box.sides[axis]
    rhs = d_i * r / 2.0 * dnorm
    return lhs, rhs, lhs <= rhs * (1.0 + POINCARE_SLACK)


@dataclass
class ProblemDiagnostics:
    sum_inv_p: float
    picondition_ok: bool
    p_star: Optional[float]
    p_infinity: Optional[float]
    regime: str
    compact_embedding_ok: Optional[bool]
    p_sorted: tuple

    def to_record(self) -> dict:
        return {
            "sum_inv_p": self.sum_inv_p,
            "picondition_ok": self.picondition_ok,
            "p_star": self.p_star,
            "p_infinity": self.p_infinity,
            "regime": self.regime,
            "compact_embedding_ok": self.compact_embedding_ok,
            "p_sorted": list(self.p_sorted),
        }


def validate_problem(prob: Problem) -> ProblemDiagnostics:
    """Exponent diagnostics: sum 1/p_i, p*, p_infinity, regime, whether
    q < p_infinity (compact embedding).  Diagnostics only, never raises."""
    s = prob.sum_inv_p
    p_star = prob.p_star
    p_inf = prob.p_infinity
    return ProblemDiagnostics(
        sum_inv_p=s,
        picondition_ok=s > 1.0,
        p_star=p_star,
        p_infinity=p_inf,
        regime=prob.regime,
        compact_embedding_ok=(prob.q < p_inf) if p_inf is not None else None,
        p_sorted=prob.p,
    )
