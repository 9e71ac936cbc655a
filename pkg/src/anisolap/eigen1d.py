"""Principal Dirichlet eigenpair of the 1D p-Laplacian on an interval.

The eigenpair (eta, v) solves -(|v'|^{p-2} v')' = eta |v|^{p-2} v with
v(a) = v(b) = 0, v > 0 inside, normalized to max v = 1.  It is computed by
shooting on the flux formulation w = |v'|^{p-2} v', which keeps the ODE
system integrable for both p < 2 and p > 2, with the eigenvalue found by
bisection on the first-return-to-zero length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import PchipInterpolator

from .domain import Interval
from .errors import DomainError, InvalidExponentError, SearchFailureError

#: fraction of a mesh cell by which evaluation may fall outside [a, b]
CLAMP_CELLS = 1.0


def pi_p(p: float) -> float:
    """Generalized half-period pi_p = 2 * int_0^1 (1 - s^p)^(-1/p) ds.

    The substitution s = 1 - t^(p/(p-1)) removes the endpoint singularity
    entirely, so adaptive quadrature converges to ~1e-12 relative error.
    """
    if p <= 1.0:
        raise InvalidExponentError(f"pi_p requires p > 1, got {p}")
    e = p / (p - 1.0)

    def integrand(t):
        if t <= 0.0:
            # limit value: 1 - s^p ~ p t^e, so the powers of t cancel exactly
            return e * p ** (-1.0 / p)
        if t >= 1.0:
            return e
        # 1 - s^p = -expm1(p log1p(-t^e)), stable for t near 0 where s -> 1
        one_minus_sp = -np.expm1(p * np.log1p(-(t**e)))
        return e * t ** (e - 1.0) * one_minus_sp ** (-1.0 / p)

    val, _ = quad(integrand, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200)
    return 2.0 * val


@dataclass(frozen=True)
class Eigenpair1D:
    """Immutable tabulated eigenpair; evaluators use monotone-cubic interpolation."""

    p: float
    interval: Interval
    eta: float
    xs: np.ndarray
    vs: np.ndarray
    dvs: np.ndarray
    endpoint_residual: float

    def __post_init__(self):
        object.__setattr__(self, "_v_interp", PchipInterpolator(self.xs, self.vs))
        object.__setattr__(self, "_dv_interp", PchipInterpolator(self.xs, self.dvs))

    def _clamped(self, x):
        x = np.asarray(x, dtype=float)
        a, b = self.interval.a, self.interval.b
        cell = CLAMP_CELLS * (self.xs[1] - self.xs[0])
        if np.any(x < a - cell) or np.any(x > b + cell):
            raise DomainError(
                f"evaluation outside [{a}, {b}] beyond clamp tolerance {cell}"
            )
        return np.clip(x, a, b), x.ndim == 0

    def value(self, x):
        """v(x); clamps to the boundary value 0 just outside [a, b]."""
        xc, scalar = self._clamped(x)
        out = np.maximum(self._v_interp(xc), 0.0)
        return float(out) if scalar else out

    def derivative(self, x):
        xc, scalar = self._clamped(x)
        out = self._dv_interp(xc)
        return float(out) if scalar else out

    def to_record(self) -> dict:
        return {
            "p": self.p,
            "a": self.interval.a,
            "b": self.interval.b,
            "eta": self.eta,
            "mesh": [
                {"x": float(x), "v": float(v), "dv": float(dv)}
                for x, v, dv in zip(self.xs, self.vs, self.dvs)
            ],
        }

    @staticmethod
    def from_record(rec: dict) -> "Eigenpair1D":
        xs = np.array([m["x"] for m in rec["mesh"]])
        vs = np.array([m["v"] for m in rec["mesh"]])
        dvs = np.array([m["dv"] for m in rec["mesh"]])
        return Eigenpair1D(
            rec["p"], Interval(rec["a"], rec["b"]), rec["eta"], xs, vs, dvs, 0.0
        )


def eval_v(e: Eigenpair1D, x):
    return e.value(x)


def eval_dv(e: Eigenpair1D, x):
    return e.derivative(x)


def check_slope_sign(e: Eigenpair1D) -> bool:
    """True iff v'(a) > 0 and v'(b) < 0 strictly."""
    return e.dvs[0] > 0.0 and e.dvs[-1] < 0.0


def _shoot(p: float, eta: float, t_max: float, rtol: float, dense: bool = False):
    """Integrate v' = sign(w)|w|^{1/(p-1)}, w' = -eta |v|^{p-2} v from (0, 1)."""
    s = 1.0 / (p - 1.0)

    def rhs(t, y):
        v, w = y
        return (np.sign(w) * abs(w) ** s, -eta * np.sign(v) * abs(v) ** (p - 1.0))

    def cross_zero(t, y):
        return y[0]

    cross_zero.terminal = True
    cross_zero.direction = -1.0

    return solve_ivp(
        rhs,
        (0.0, t_max),
        (0.0, 1.0),
        events=cross_zero,
        rtol=rtol,
        atol=1e-14,
        dense_output=dense,
        method="RK45",
    )


def _first_zero_length(p: float, eta: float, t_max: float, rtol: float) -> float:
    sol = _shoot(p, eta, t_max, rtol)
    if sol.t_events[0].size:
        return float(sol.t_events[0][0])
    return np.inf


def solve_eigenpair(
    p: float,
    interval: Interval,
    tol: float = 1e-10,
    ode_rtol: float = 1e-12,
    samples_per_unit: int = 4096,
) -> Eigenpair1D:
    """Principal eigenpair on ``interval`` with relative eigenvalue tolerance ``tol``.

    The first-return-to-zero length of the shooting trajectory is strictly
    decreasing in eta, so bisection on it converges unconditionally once a
    bracket is found; the bracket search expands geometrically from the
    closed-form seed (p-1)(pi_p/L)^p.
    """
    if p <= 1.0:
        raise InvalidExponentError(f"solve_eigenpair requires p > 1, got {p}")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    L = interval.length
    t_max = 1.5 * L

    eta0 = (p - 1.0) * (pi_p(p) / L) ** p
    lo = hi = eta0
    scanned = [eta0, eta0]
    # lower end: first zero beyond L (or never); upper end: first zero before L
    for _ in range(80):
        if _first_zero_length(p, lo, t_max, ode_rtol) > L:
            break
        lo *= 0.5
        scanned[0] = lo
    else:
        raise SearchFailureError("no lower eigenvalue bracket", tuple(scanned))
    for _ in range(80):
        if _first_zero_length(p, hi, t_max, ode_rtol) < L:
            break
        hi *= 2.0
        scanned[1] = hi
    else:
        raise SearchFailureError("no upper eigenvalue bracket", tuple(scanned))

    while (hi - lo) > tol * lo:
        mid = 0.5 * (lo + hi)
        if _first_zero_length(p, mid, t_max, ode_rtol) > L:
            lo = mid
        else:
            hi = mid
    eta = 0.5 * (lo + hi)

    # tabulate on the shooting trajectory; take lo so the zero falls at/after b
    sol = _shoot(p, lo, t_max, ode_rtol, dense=True)
    n = int(round(samples_per_unit * L)) + 1
    n = min(max(n, 1025), 65537)
    ts = np.linspace(0.0, L, n)
    v, w = sol.sol(ts)
    s = 1.0 / (p - 1.0)
    dv = np.sign(w) * np.abs(w) ** s
    endpoint_residual = abs(float(v[-1]))

    # max v sits at the midpoint by symmetry; normalize max v = 1
    vmax = float(sol.sol(0.5 * L)[0])
    vmax = max(vmax, float(v.max()))
    v = v / vmax
    dv = dv / vmax
    v[0] = 0.0
    v[-1] = 0.0
    v[1:-1] = np.maximum(v[1:-1], 0.0)

    return Eigenpair1D(
        p=p,
        interval=interval,
        eta=eta,
        xs=ts + interval.a,
        vs=v,
        dvs=dv,
        endpoint_residual=endpoint_residual / vmax,
    )
