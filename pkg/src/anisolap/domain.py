"""Geometric primitives: intervals, boxes, problems, tensor grids, grid fields."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ContainmentError

SUBLINEAR = "sublinear"
INTERMEDIATE = "intermediate"
OUT_OF_THEOREM = "out-of-theorem"


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"degenerate interval [{self.a}, {self.b}]")

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.a + self.b)

    def contains(self, other: "Interval") -> bool:
        return self.a <= other.a and other.b <= self.b

    def strictly_contains(self, other: "Interval") -> bool:
        return self.a < other.a and other.b < self.b

    def inflate(self, frac: float) -> "Interval":
        m = frac * self.length
        return Interval(self.a - m, self.b + m)


@dataclass(frozen=True)
class Box:
    intervals: tuple

    def __init__(self, intervals: Sequence[Interval]):
        object.__setattr__(self, "intervals", tuple(intervals))
        if not self.intervals:
            raise ValueError("empty box")

    @property
    def dim(self) -> int:
        return len(self.intervals)

    @property
    def sides(self) -> tuple:
        """Per-axis side lengths d^i."""
        return tuple(iv.length for iv in self.intervals)

    @property
    def midpoint(self) -> tuple:
        return tuple(iv.midpoint for iv in self.intervals)

    def contains(self, other: "Box") -> bool:
        self._check_dim(other)
        return all(s.contains(o) for s, o in zip(self.intervals, other.intervals))

    def strictly_contains(self, other: "Box") -> bool:
        self._check_dim(other)
        return all(s.strictly_contains(o) for s, o in zip(self.intervals, other.intervals))

    def contains_point(self, x: Sequence[float]) -> bool:
        return all(iv.a <= xi <= iv.b for iv, xi in zip(self.intervals, x))

    def interior_contains_point(self, x: Sequence[float]) -> bool:
        return all(iv.a < xi < iv.b for iv, xi in zip(self.intervals, x))

    def inflate(self, frac: float) -> "Box":
        return Box([iv.inflate(frac) for iv in self.intervals])

    def _check_dim(self, other: "Box"):
        if other.dim != self.dim:
            raise ContainmentError(f"dimension mismatch {self.dim} vs {other.dim}")

    @staticmethod
    def from_bounds(a: Sequence[float], b: Sequence[float]) -> "Box":
        if len(a) != len(b):
            raise ValueError("bound vectors of unequal length")
        return Box([Interval(ai, bi) for ai, bi in zip(a, b)])


@dataclass(frozen=True)
class Problem:
    """Exponent data (p_1 <= ... <= p_N, q), parameter lambda and box domain.

    The exponent vector is stored sorted ascending; passing an unsorted
    vector triggers a warning and silent normalization.
    """

    p: tuple
    q: float
    lam: float
    omega: Box

    def __init__(self, p: Sequence[float], q: float, lam: float, omega: Box):
        p = tuple(float(v) for v in p)
        if any(v <= 1.0 for v in p):
            raise ValueError(f"all exponents must exceed 1, got {p}")
        if q <= 1.0:
            raise ValueError(f"q must exceed 1, got {q}")
        if lam < 0.0:
            raise ValueError(f"lambda must be nonnegative, got {lam}")
        if omega.dim != len(p):
            raise ValueError(f"{len(p)} exponents for a {omega.dim}-dimensional box")
        if any(p[i] > p[i + 1] for i in range(len(p) - 1)):
            warnings.warn("exponent vector not sorted ascending; sorting", stacklevel=2)
            p = tuple(sorted(p))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", float(q))
        object.__setattr__(self, "lam", float(lam))
        object.__setattr__(self, "omega", omega)

    @property
    def dim(self) -> int:
        return len(self.p)

    @property
    def sum_inv_p(self) -> float:
        return sum(1.0 / v for v in self.p)

    @property
    def p_star(self):
        """N / (sum 1/p_i - 1), defined only when sum 1/p_i > 1."""
        s = self.sum_inv_p
        if s <= 1.0:
            return None
        return self.dim / (s - 1.0)

    @property
    def p_infinity(self):
        ps = self.p_star
        if ps is None:
            return None
        return max(ps, self.p[-1])

    @property
    def regime(self) -> str:
        if self.q < self.p[0]:
            return SUBLINEAR
        if self.q < self.p[-1]:
            return INTERMEDIATE
        return OUT_OF_THEOREM

    def with_lambda(self, lam: float) -> "Problem":
        return Problem(self.p, self.q, lam, self.omega)


class Grid:
    """Uniform tensor-product grid over a box; boundary nodes lie on the faces."""

    def __init__(self, box: Box, n: Sequence[int]):
        n = tuple(int(v) for v in n)
        if len(n) != box.dim:
            raise ValueError("one node count per axis required")
        if any(v < 3 for v in n):
            raise ValueError(f"need at least 3 nodes per axis, got {n}")
        self.box = box
        self.shape = n
        self.h = tuple(iv.length / (ni - 1) for iv, ni in zip(box.intervals, n))
        self.coords = [np.linspace(iv.a, iv.b, ni) for iv, ni in zip(box.intervals, n)]
        self._interior = None
        self._node_volume = None

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def interior_mask(self) -> np.ndarray:
        if self._interior is None:
            m = np.ones(self.shape, dtype=bool)
            for ax in range(self.dim):
                sl = [slice(None)] * self.dim
                sl[ax] = 0
                m[tuple(sl)] = False
                sl[ax] = -1
                m[tuple(sl)] = False
            self._interior = m
        return self._interior

    @property
    def boundary_mask(self) -> np.ndarray:
        return ~self.interior_mask

    def axis_weights(self, ax: int) -> np.ndarray:
        """Trapezoid quadrature weights along one axis."""
        w = np.full(self.shape[ax], self.h[ax])
        w[0] = w[-1] = 0.5 * self.h[ax]
        return w

    @property
    def node_volume(self) -> np.ndarray:
        """Tensor-product trapezoid weight at every node."""
        if self._node_volume is None:
            vol = np.ones(self.shape)
            for ax in range(self.dim):
                w = self.axis_weights(ax)
                sh = [1] * self.dim
                sh[ax] = -1
                vol = vol * w.reshape(sh)
            self._node_volume = vol
        return self._node_volume

    def transverse_face_weight(self, ax: int) -> np.ndarray:
        """Product of trapezoid weights over axes other than ``ax``.

        Faces along ``ax`` sit at node positions in the transverse axes, so
        the face measure is h_ax times this array (broadcast over ``ax``).
        """
        vol = np.ones([1 if k == ax else self.shape[k] for k in range(self.dim)])
        for k in range(self.dim):
            if k == ax:
                continue
            w = self.axis_weights(k)
            sh = [1] * self.dim
            sh[k] = -1
            vol = vol * w.reshape(sh)
        return vol

    def meshgrid(self):
        return np.meshgrid(*self.coords, indexing="ij")

    def refine(self) -> "Grid":
        """Grid with 2n-1 nodes per axis (nested refinement)."""
        return Grid(self.box, [2 * ni - 1 for ni in self.shape])

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.box == other.box
            and self.shape == other.shape
        )

    def __hash__(self):
        return hash((self.box, self.shape))


@dataclass
class GridField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"value shape {self.values.shape} != grid shape {self.grid.shape}"
            )

    @staticmethod
    def zeros(grid: Grid) -> "GridField":
        return GridField(grid, np.zeros(grid.shape))

    @staticmethod
    def from_function(grid: Grid, f) -> "GridField":
        mesh = grid.meshgrid()
        return GridField(grid, np.asarray(f(*mesh), dtype=float))

    def copy(self) -> "GridField":
        return GridField(self.grid, self.values.copy())

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def is_dirichlet(self, tol: float = 0.0) -> bool:
        return float(np.max(np.abs(self.values[self.grid.boundary_mask]))) <= tol

    def rows(self):
        """Yield (multi-index, coordinates, value) per node, C order."""
        for idx in np.ndindex(*self.grid.shape):
            x = tuple(self.grid.coords[k][idx[k]] for k in range(self.grid.dim))
            yield idx, x, float(self.values[idx])
