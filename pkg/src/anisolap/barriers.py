"""Explicit sub/supersolution barriers built from 1D p-Laplacian eigenpairs.

The subsolution is eps * prod_i v_i(x_i)^alpha_i on an inner box (zero
outside), the supersolution M * prod_i v_i(x_i) with eigenpairs on a box
strictly enclosing the domain.  The module computes the admissibility
thresholds: lambda_star_sub = max over the inner box of the pointwise
function S (with its S0/S1 split and the boundary-layer negativity
certificate that makes the maximum finite), and lambda_star_super = min
over the closed domain of sum_i eta_i (M prod_j v_j)^(p_i - q).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .domain import Box, Grid, GridField, Problem, SUBLINEAR
from .eigen1d import Eigenpair1D, solve_eigenpair
from .errors import (
    CertificationError,
    ContainmentError,
    DomainError,
    NoAdmissibleEpsilonError,
    RegimeError,
)

DEFAULT_SCAN_RESOLUTION = 201
DELTA_FLOOR_FACTOR = 1e-6

_eigen_cache: dict = {}


def eigenpairs_for(p: Sequence[float], box: Box) -> tuple:
    """One eigenpair per axis, cached (eigenpairs are immutable)."""
    out = []
    for pi, iv in zip(p, box.intervals):
        key = (float(pi), iv.a, iv.b)
        if key not in _eigen_cache:
            _eigen_cache[key] = solve_eigenpair(pi, iv)
        out.append(_eigen_cache[key])
    return tuple(out)


@dataclass(frozen=True)
class BarrierSpec:
    """Everything defining the barrier pair: boxes, eps, alpha, M, margin delta."""

    inner: Box
    outer: Box
    eps: float
    alpha: tuple
    M: float
    delta: Optional[float] = None
    i0: int = 0

    def validate(self, prob: Problem):
        if self.eps <= 0.0 or self.M <= 0.0:
            raise ValueError("eps and M must be positive")
        if len(self.alpha) != prob.dim:
            raise ValueError("one alpha per axis required")
        for ai, pi in zip(self.alpha, prob.p):
            if ai <= 1.0:
                raise ValueError(f"alpha={ai} must exceed 1")
            if pi > prob.q and ai <= pi / (pi - prob.q):
                raise ValueError(
                    f"alpha={ai} must exceed p/(p-q)={pi / (pi - prob.q)} on a "
                    f"supercritical axis (p={pi}, q={prob.q})"
                )
        if not prob.omega.contains(self.inner):
            raise ContainmentError("inner box must be contained in omega")
        if not self.outer.strictly_contains(prob.omega):
            raise ContainmentError("outer box must strictly contain omega")

    def to_record(self) -> dict:
        return {
            "inner": {"a": [iv.a for iv in self.inner.intervals],
                      "b": [iv.b for iv in self.inner.intervals]},
            "outer": {"a": [iv.a for iv in self.outer.intervals],
                      "b": [iv.b for iv in self.outer.intervals]},
            "eps": self.eps,
            "alpha": list(self.alpha),
            "M": self.M,
            "delta": self.delta,
            "i0": self.i0,
        }


def split_index(prob: Problem) -> int:
    """Number of axes with p_i <= q (the S0 block); 0 in the sublinear regime."""
    return sum(1 for pi in prob.p if pi <= prob.q)


def default_alpha(prob: Problem) -> tuple:
    """alpha_i = 2 p_i/(p_i - q) on supercritical axes (double the strict
    lower bound for slack), alpha_i = 2 where p_i <= q."""
    if prob.q >= prob.p[-1]:
        raise RegimeError(
            f"no subsolution recipe for q={prob.q} >= p_N={prob.p[-1]}"
        )
    return tuple(
        2.0 * pi / (pi - prob.q) if pi > prob.q else 2.0 for pi in prob.p
    )


def default_spec(prob: Problem, eps: float = 1.0, M: float = 1.0,
                 alpha=None, inner: Box = None, outer: Box = None) -> BarrierSpec:
    """Default barrier layout: inner box = omega, outer box inflated by 25%."""
    if alpha is None:
        alpha = default_alpha(prob)
    spec = BarrierSpec(
        inner=inner or prob.omega,
        outer=outer or prob.omega.inflate(0.25),
        eps=eps,
        alpha=tuple(alpha),
        M=M,
        delta=None,
        i0=split_index(prob),
    )
    spec.validate(prob)
    return spec


class SValue(NamedTuple):
    total: float
    s0: float
    s1: float


def _broadcast(arr: np.ndarray, ax: int, ndim: int) -> np.ndarray:
    sh = [1] * ndim
    sh[ax] = -1
    return np.asarray(arr).reshape(sh)


def _s_summands(spec: BarrierSpec, prob: Problem, eigenpairs, axis_xs):
    """Per-axis summands of S, broadcast over the tensor grid of ``axis_xs``."""
    ndim = prob.dim
    v = [_broadcast(ep.value(x), k, ndim) for k, (ep, x) in enumerate(zip(eigenpairs, axis_xs))]
    dv = [_broadcast(ep.derivative(x), k, ndim) for k, (ep, x) in enumerate(zip(eigenpairs, axis_xs))]
    prod_all = np.ones([1] * ndim)
    for vk, ak in zip(v, spec.alpha):
        prod_all = prod_all * vk**ak
    summands = []
    for i in range(ndim):
        pi, ai = prob.p[i], spec.alpha[i]
        eta_i = eigenpairs[i].eta
        prod_except = prod_all / v[i] ** ai
        bracket = (1.0 - ai) * (pi - 1.0) * np.abs(dv[i]) ** pi + eta_i * v[i] ** pi
        # exact ratio of operator to reaction term: the flux contributes
        # alpha_i^(p_i - 1), the reaction none, so the net alpha power is
        # p_i - 1 (not p_i - q, which would only be right for q = 1)
        term = (
            ai ** (pi - 1.0)
            * (spec.eps * prod_except) ** (pi - prob.q)
            * v[i] ** (ai * (pi - prob.q) - pi)
            * bracket
        )
        summands.append(term)
    return summands


def pointwise_S(spec: BarrierSpec, prob: Problem, x: Sequence[float]) -> SValue:
    """S(x) with its S0 (p_i <= q) / S1 (p_i > q) split, x interior to the inner box."""
    if not spec.inner.interior_contains_point(x):
        raise DomainError(f"{tuple(x)} is not strictly interior to the inner box")
    eigenpairs = eigenpairs_for(prob.p, spec.inner)
    if any(ep.value(xi) <= 0.0 for ep, xi in zip(eigenpairs, x)):
        raise DomainError(
            f"an eigenfunction vanishes at {tuple(x)}; respect the delta margin"
        )
    axis_xs = [np.array([xi]) for xi in x]
    summands = _s_summands(spec, prob, eigenpairs, axis_xs)
    s0 = sum(t.item() for t, pi in zip(summands, prob.p) if pi <= prob.q)
    s1 = sum(t.item() for t, pi in zip(summands, prob.p) if pi > prob.q)
    return SValue(s0 + s1, s0, s1)


def certify_delta(spec: BarrierSpec, prob: Problem, scan_points: int = 2000) -> float:
    """Boundary margin delta such that every S0 bracket
    (1-alpha)(p-1)|v'|^p + eta v^p is strictly negative within delta of the
    inner-box boundary; found by halving from min side/4.

    With no S0 axes (sublinear regime) the certificate is vacuous and a
    small default margin is returned.
    """
    eigenpairs = eigenpairs_for(prob.p, spec.inner)
    d_min = min(spec.inner.sides)
    s0_axes = [i for i, pi in enumerate(prob.p) if pi <= prob.q]
    if not s0_axes:
        return 1e-3 * d_min

    delta = 0.25 * d_min
    floor = DELTA_FLOOR_FACTOR * d_min
    while delta >= floor:
        ok = True
        for i in s0_axes:
            ep, iv = eigenpairs[i], spec.inner.intervals[i]
            pi, ai = prob.p[i], spec.alpha[i]
            for lo, hi in ((iv.a, iv.a + delta), (iv.b - delta, iv.b)):
                xs = np.linspace(lo, hi, scan_points)
                bracket = (
                    (1.0 - ai) * (pi - 1.0) * np.abs(ep.derivative(xs)) ** pi
                    + ep.eta * ep.value(xs) ** pi
                )
                if not np.all(bracket < 0.0):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return delta
        delta *= 0.5
    raise CertificationError(
        f"no delta down to {floor} certifies bracket negativity; "
        "alpha may be too small or the scan too coarse"
    )


def _resolution(prob: Problem, grid_resolution) -> tuple:
    if grid_resolution is None:
        return (DEFAULT_SCAN_RESOLUTION,) * prob.dim
    if np.isscalar(grid_resolution):
        return (int(grid_resolution),) * prob.dim
    return tuple(int(v) for v in grid_resolution)


def lambda_star_sub(spec: BarrierSpec, prob: Problem, grid_resolution=None) -> float:
    """max of S over the delta-interior of the inner box (tensor grid scan)."""
    if prob.q >= prob.p[-1]:
        raise RegimeError(f"q={prob.q} >= p_N={prob.p[-1]}: no subsolution recipe")
    spec.validate(prob)
    delta = spec.delta if spec.delta is not None else certify_delta(spec, prob)
    res = _resolution(prob, grid_resolution)
    eigenpairs = eigenpairs_for(prob.p, spec.inner)
    axis_xs = [
        np.linspace(iv.a + delta, iv.b - delta, ri)
        for iv, ri in zip(spec.inner.intervals, res)
    ]
    total = sum(_s_summands(spec, prob, eigenpairs, axis_xs))
    if not np.all(np.isfinite(total)):
        raise CertificationError("non-finite S values on the scan grid")
    return float(np.max(total))


def epsilon_for_lambda(prob: Problem, spec: BarrierSpec, lam: float,
                       grid_resolution=None, max_halvings: int = 200) -> float:
    """Largest tested eps (halving from spec.eps) with lambda_star_sub <= lam.

    Terminates in the sublinear regime because every S summand scales as
    eps^(p_i - q) with p_i - q >= p_1 - q > 0.
    """
    if prob.regime != SUBLINEAR:
        raise RegimeError("epsilon_for_lambda applies to the sublinear regime only")
    if lam <= 0.0:
        raise NoAdmissibleEpsilonError(
            "no admissible eps for lambda <= 0 (existence requires lambda > 0)"
        )
    delta = spec.delta if spec.delta is not None else certify_delta(spec, prob)
    eps = spec.eps
    for _ in range(max_halvings):
        trial = replace(spec, eps=eps, delta=delta)
        if lambda_star_sub(trial, prob, grid_resolution) <= lam:
            return eps
        eps *= 0.5
    raise NoAdmissibleEpsilonError(f"no admissible eps after {max_halvings} halvings")


def _super_threshold_field(spec: BarrierSpec, prob: Problem, axis_xs, M=None):
    """sum_i eta_i (M prod_j v_j)^(p_i - q) on the tensor grid of axis_xs."""
    eigenpairs = eigenpairs_for(prob.p, spec.outer)
    ndim = prob.dim
    M = spec.M if M is None else M
    prod = np.ones([1] * ndim)
    for k, (ep, x) in enumerate(zip(eigenpairs, axis_xs)):
        prod = prod * _broadcast(ep.value(x), k, ndim)
    total = np.zeros(np.broadcast_shapes(prod.shape))
    for i in range(ndim):
        total = total + eigenpairs[i].eta * (M * prod) ** (prob.p[i] - prob.q)
    return total


def lambda_star_super(spec: BarrierSpec, prob: Problem, grid_resolution=None) -> float:
    """min over the closed domain of sum_i eta_i (M prod_j v_j)^(p_i - q)."""
    if prob.q >= prob.p[-1]:
        raise RegimeError(f"q={prob.q} >= p_N={prob.p[-1]}: no supersolution recipe")
    if not spec.outer.strictly_contains(prob.omega):
        raise ContainmentError("outer box must strictly contain the domain closure")
    res = _resolution(prob, grid_resolution)
    axis_xs = [np.linspace(iv.a, iv.b, ri) for iv, ri in zip(prob.omega.intervals, res)]
    return float(np.min(_super_threshold_field(spec, prob, axis_xs)))


def m_for_lambda(prob: Problem, spec: BarrierSpec, lam: float,
                 floor: GridField = None, grid_resolution=None,
                 max_doublings: int = 200) -> float:
    """First admissible M on a doubling ladder from spec.M: the supersolution
    threshold must reach lam and, when a floor field is given, M prod v_j
    must dominate it nodewise."""
    if prob.q >= prob.p[-1]:
        raise RegimeError(f"q={prob.q} >= p_N={prob.p[-1]}: no supersolution recipe")
    if not spec.outer.strictly_contains(prob.omega):
        raise ContainmentError("outer box must strictly contain the domain closure")
    res = _resolution(prob, grid_resolution)
    axis_xs = [np.linspace(iv.a, iv.b, ri) for iv, ri in zip(prob.omega.intervals, res)]
    eigenpairs = eigenpairs_for(prob.p, spec.outer)

    floor_prod = None
    if floor is not None:
        ndim = prob.dim
        floor_prod = np.ones([1] * ndim)
        for k, ep in enumerate(eigenpairs):
            floor_prod = floor_prod * _broadcast(ep.value(floor.grid.coords[k]), k, ndim)

    M = spec.M
    for _ in range(max_doublings):
        thresh = float(np.min(_super_threshold_field(spec, prob, axis_xs, M=M)))
        ok = thresh >= lam
        if ok and floor is not None:
            ok = bool(np.all(M * floor_prod >= floor.values - 1e-12))
        if ok:
            return M
        M *= 2.0
    raise NoAdmissibleEpsilonError(f"no admissible M after {max_doublings} doublings")


@dataclass(frozen=True)
class BarrierFunction:
    """Evaluator for a barrier and its per-axis partial derivatives."""

    kind: str  # "sub" | "super"
    spec: BarrierSpec
    prob: Problem
    eigenpairs: tuple

    def _axis_factors(self, axis_xs):
        """Per-axis eigenfunction values and derivatives, zeroed outside the
        barrier's box."""
        box = self.spec.inner if self.kind == "sub" else self.spec.outer
        vals, dvals = [], []
        for k, (ep, x) in enumerate(zip(self.eigenpairs, axis_xs)):
            x = np.asarray(x, dtype=float)
            iv = box.intervals[k]
            inside = (x >= iv.a) & (x <= iv.b)
            xc = np.clip(x, iv.a, iv.b)
            vals.append(np.where(inside, ep.value(xc), 0.0))
            dvals.append(np.where(inside, ep.derivative(xc), 0.0))
        return vals, dvals

    def value_on_axes(self, axis_xs) -> np.ndarray:
        ndim = self.prob.dim
        vals, _ = self._axis_factors(axis_xs)
        out = np.ones([1] * ndim)
        if self.kind == "sub":
            for k, (vk, ak) in enumerate(zip(vals, self.spec.alpha)):
                out = out * _broadcast(vk, k, ndim) ** ak
            return self.spec.eps * out
        for k, vk in enumerate(vals):
            out = out * _broadcast(vk, k, ndim)
        return self.spec.M * out

    def partial_on_axes(self, axis: int, axis_xs) -> np.ndarray:
        ndim = self.prob.dim
        vals, dvals = self._axis_factors(axis_xs)
        out = np.ones([1] * ndim)
        if self.kind == "sub":
            for k, (vk, ak) in enumerate(zip(vals, self.spec.alpha)):
                if k == axis:
                    ai = self.spec.alpha[axis]
                    out = out * _broadcast(vk ** (ai - 1.0) * dvals[k] * ai, k, ndim)
                else:
                    out = out * _broadcast(vk**ak, k, ndim)
            return self.spec.eps * out
        for k, vk in enumerate(vals):
            out = out * _broadcast(dvals[k] if k == axis else vk, k, ndim)
        return self.spec.M * out

    def value(self, x: Sequence[float]) -> float:
        return self.value_on_axes([np.array([xi]) for xi in x]).item()

    def partial(self, axis: int, x: Sequence[float]) -> float:
        return self.partial_on_axes(axis, [np.array([xi]) for xi in x]).item()


def build_barrier(kind: str, spec: BarrierSpec, prob: Problem) -> BarrierFunction:
    if kind not in ("sub", "super"):
        raise ValueError(f"unknown barrier kind {kind!r}")
    spec.validate(prob)
    box = spec.inner if kind == "sub" else spec.outer
    eigenpairs = eigenpairs_for(prob.p, box)
    return BarrierFunction(kind=kind, spec=spec, prob=prob, eigenpairs=eigenpairs)


def sample_to_grid(bf: BarrierFunction, grid: Grid) -> GridField:
    """Nodal samples; the sub barrier is exactly zero outside its inner closure."""
    values = bf.value_on_axes(grid.coords)
    return GridField(grid, np.broadcast_to(values, grid.shape).copy())


def nonexistence_bound(prob: Problem) -> float:
    """(2/(d^1 p_1))^{p_1}: below it no positive solution exists when q = p_1."""
    if abs(prob.q - prob.p[0]) > 1e-12:
        raise RegimeError(
            f"the nonexistence bound is derived for q = p_1; got q={prob.q}, p_1={prob.p[0]}"
        )
    d1 = prob.omega.sides[0]
    return (2.0 / (d1 * prob.p[0])) ** prob.p[0]
