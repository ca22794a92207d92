"""Convex bodies, inradius, and lattice-point counting in residue classes."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import ArgumentError, ResourceError

DEFAULT_C_D = 10.0
ENUM_BUDGET = 10**7


@dataclass(frozen=True)
class Box:
    """Open box ``prod (lower_i, upper_i)``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or not self.lower:
            raise ArgumentError("lower and upper must be non-empty and of equal length")
        if any(not lo < hi for lo, hi in zip(self.lower, self.upper)):
            raise ArgumentError("box must have lower_i < upper_i on every axis")

    @property
    def dim(self) -> int:
        return len(self.lower)

    def bounding_box(self):
        return self.lower, self.upper

    def volume(self) -> float:
        return float(np.prod([hi - lo for lo, hi in zip(self.lower, self.upper)]))

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        lo = np.asarray(self.lower)
        hi = np.asarray(self.upper)
        return np.all((pts > lo) & (pts < hi), axis=1)


@dataclass(frozen=True)
class HalfspaceSet:
    """Open polytope ``{x : A x < b}`` intersected with a finite bounding box."""

    normals: tuple[tuple[float, ...], ...]
    offsets: tuple[float, ...]
    box: Box

    def __post_init__(self):
        if len(self.normals) != len(self.offsets):
            raise ArgumentError("one offset per normal is required")
        if any(len(a) != self.box.dim for a in self.normals):
            raise ArgumentError("normals must match the bounding box dimension")

    @property
    def dim(self) -> int:
        return self.box.dim

    def bounding_box(self):
        return self.box.lower, self.box.upper

    def constraints(self) -> tuple[np.ndarray, np.ndarray]:
        """All half-spaces including the bounding box faces."""
        D = self.dim
        A = [np.asarray(a, dtype=float) for a in self.normals]
        b = list(self.offsets)
        for i in range(D):
            e = np.zeros(D)
            e[i] = 1.0
            A.append(e)
            b.append(self.box.upper[i])
            A.append(-e)
            b.append(-self.box.lower[i])
        return np.array(A), np.array(b, dtype=float)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        A, b = self.constraints()
        return np.all(pts @ A.T < b, axis=1)


ConvexBody = Box | HalfspaceSet


def simplex(D: int, scale: float = 1.0) -> HalfspaceSet:
    """The open simplex ``{x_i > 0, sum x_i < scale}``."""
    box = Box((0.0,) * D, (float(scale),) * D)
    return HalfspaceSet(((1.0,) * D,), (float(scale),), box)


def inradius(body: ConvexBody) -> float:
    """Radius of the largest open ball inside ``body``."""
    if isinstance(body, Box):
        return min(hi - lo for lo, hi in zip(body.lower, body.upper)) / 2.0
    A, b = body.constraints()
    norms = np.linalg.norm(A, axis=1)
    if np.any(norms == 0):
        raise ArgumentError("zero normal vector")
    D = body.dim
    # variables (x, r): maximize r s.t. a_i.x + r |a_i| <= b_i
    c = np.zeros(D + 1)
    c[-1] = -1.0
    A_ub = np.hstack([A, norms[:, None]])
    res = linprog(c, A_ub=A_ub, b_ub=b, bounds=[(None, None)] * D + [(0, None)],
                  method="highs", options={"primal_feasibility_tolerance": 1e-10,
                                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0 or res.x[-1] <= 0:
        raise ArgumentError("body is empty or has no interior")
    return float(res.x[-1])


def _residue_axis(lo: float, hi: float, m: int, a: int) -> np.ndarray:
    """Integers ``y`` with ``lo < y < hi`` and ``y = a (mod m)``."""
    first = math.floor(lo) + 1
    first += (a - first) % m
    last = math.ceil(hi) - 1
    if first > last:
        return np.zeros(0, dtype=np.int64)
    return np.arange(first, last + 1, m, dtype=np.int64)


def _axis_count(lo: float, hi: float, m: int, a: int) -> int:
    first = math.floor(lo) + 1
    first += (a - first) % m
    last = math.ceil(hi) - 1
    return 0 if first > last else (last - first) // m + 1


@dataclass
class LatticeCount:
    count: int
    points: np.ndarray | None = None


def lattice_points(body: ConvexBody, m: int = 1, a: Sequence[int] | int = 0,
                   enumerate_points: bool = False, budget: int = ENUM_BUDGET) -> LatticeCount:
    """Exact ``|body ∩ (m Z^D + a)|``; boxes are counted in closed form."""
    if m < 1:
        raise ArgumentError("modulus m must be a positive integer")
    D = body.dim
    if isinstance(a, (int, np.integer)):
        a = (int(a),) * D
    a = tuple(int(v) % m for v in a)
    if len(a) != D:
        raise ArgumentError("residue tuple has wrong length")
    lower, upper = body.bounding_box()
    if any(hi - lo > 1e9 for lo, hi in zip(lower, upper)):
        raise ResourceError("bounding box side exceeds 1e9")
    if isinstance(body, Box) and not enumerate_points:
        return LatticeCount(int(np.prod([_axis_count(lo, hi, m, ai) for lo, hi, ai in zip(lower, upper, a)])))
    axes = [_residue_axis(lo, hi, m, ai) for lo, hi, ai in zip(lower, upper, a)]
    size = int(np.prod([len(ax) for ax in axes]))
    if size > budget:
        raise ResourceError(f"enumeration of {size} candidate points exceeds budget {budget}")
    if size == 0:
        return LatticeCount(0, np.zeros((0, D), dtype=np.int64) if enumerate_points else None)
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, D)
    inside = body.contains(grid.astype(float))
    pts = grid[inside]
    return LatticeCount(int(len(pts)), pts if enumerate_points else None)


def lattice_equidistribution(body: Box, m: int, a: Sequence[int] | int = 0) -> float:
    """``density * m^D - 1`` for the residue class ``a`` inside ``body``."""
    total = lattice_points(body, 1, 0).count
    sub = lattice_points(body, m, a).count
    return sub / total * m ** body.dim - 1.0


@dataclass
class AverageReport:
    average: float
    reference: float
    deviation: float
    ratio_m_over_r: float


def average_periodic(body: ConvexBody, f: Callable[[np.ndarray], np.ndarray] | np.ndarray, m: int,
                     C_D: float = 1.0) -> AverageReport:
    """Average of an ``m``-periodic function over the lattice points of ``body``.

    ``f`` is either an array of shape ``(m,)*D`` or a vectorized callable on
    residue tuples.  Requires ``inradius >= C_D * m``; for smaller bodies use
    :func:`sup_box_average` instead.
    """
    r = inradius(body)
    if r < C_D * m:
        raise ArgumentError(
            f"inradius {r:.4g} < {C_D} * m = {C_D * m}; the averaging estimate does not apply, "
            "use sup_box_average (covering inequality) instead"
        )
    D = body.dim
    table = _periodic_table(f, m, D)
    reference = float(table.mean())
    total = 0
    acc = 0.0
    for res in itertools.product(range(m), repeat=D):
        c = lattice_points(body, m, res).count
        total += c
        acc += c * table[res]
    avg = acc / total
    dev = (avg - reference) / reference if reference != 0 else avg - reference
    return AverageReport(avg, reference, dev, m / r)


def _periodic_table(f, m: int, D: int) -> np.ndarray:
    if callable(f):
        grid = np.stack(np.meshgrid(*([np.arange(m)] * D), indexing="ij"), axis=-1).reshape(-1, D)
        return np.asarray(f(grid), dtype=float).reshape((m,) * D)
    table = np.asarray(f, dtype=float)
    if table.shape != (m,) * D:
        raise ArgumentError(f"periodic table must have shape {(m,) * D}")
    return table


def covering_constant(D: int) -> float:
    """The constant ``4^D`` from the Ruzsa covering argument."""
    return 4.0 ** D


@dataclass
class CoverReport:
    sup_average: float
    body_average: float
    constant: float
    cube_side: int

    @property
    def holds(self) -> bool:
        return self.body_average <= self.constant * self.sup_average + 1e-12


def sup_box_average(body: ConvexBody, f: Callable[[np.ndarray], np.ndarray], C_D: float = 1.0,
                    budget: int = ENUM_BUDGET) -> CoverReport:
    """Largest average of ``f`` over integer cubes ``y + [-r, r]^D`` meeting ``body``.

    ``f`` must be non-negative and vectorized on integer point arrays.  The
    sup ranges over cubes centred at every lattice point of the body, which
    is enough for the covering bound since the covering cubes can be centred
    there.
    """
    r = inradius(body)
    if r <= C_D:
        raise ArgumentError(f"inradius {r:.4g} must exceed C_D = {C_D}")
    D = body.dim
    pts = lattice_points(body, 1, 0, enumerate_points=True, budget=budget).points
    vals = np.asarray(f(pts), dtype=float)
    if np.any(vals < 0):
        raise ArgumentError("f must be non-negative")
    body_avg = float(vals.mean())
    side = int(math.floor(r))
    lower, upper = body.bounding_box()
    lo = np.floor(np.asarray(lower)).astype(np.int64) - side
    hi = np.ceil(np.asarray(upper)).astype(np.int64) + side
    shape = tuple(int(v) for v in (hi - lo + 1))
    if int(np.prod(shape)) > budget:
        raise ResourceError("cube grid exceeds budget")
    dense = np.zeros(shape)
    grid = np.stack(np.meshgrid(*[np.arange(l, h + 1) for l, h in zip(lo, hi)], indexing="ij"), axis=-1)
    dense[...] = np.asarray(f(grid.reshape(-1, D)), dtype=float).reshape(shape)
    # cube sums via a D-dimensional prefix sum
    S = dense
    for ax in range(D):
        S = np.cumsum(S, axis=ax)
        pad = [(0, 0)] * D
        pad[ax] = (1, 0)
        S = np.pad(S, pad)
    width = 2 * side + 1
    best = 0.0
    for pt in pts:
        start = pt - side - lo
        total = 0.0
        for corner in itertools.product((0, 1), repeat=D):
            idx = tuple(int(s + width * c) for s, c in zip(start, corner))
            total += (-1) ** (D - sum(corner)) * S[idx]
        best = max(best, total / width ** D)
    return CoverReport(best, body_avg, covering_constant(D), width)


@dataclass
class GaussCheck:
    count: int
    volume_scaled: float
    epsilon: float
    m_over_r: float
    records: list = field(default_factory=list)


def gauss_check(body: Box, m: int, a: Sequence[int] | int = 0) -> GaussCheck:
    """Relative error of ``|Ω ∩ (mZ^D+a)|`` against ``m^-D vol(Ω)``."""
    c = lattice_points(body, m, a).count
    v = body.volume() / m ** body.dim
    return GaussCheck(c, v, c / v - 1.0, m / inradius(body))
