"""Box norms, local Gowers norms, dual functions and the Cauchy-Schwarz inequality suite.

Conventions: ``T^n f(x) = f(x - n)`` with indices mod ``N``; the coarse range
``[L]`` is ``{1, ..., L}`` and the fine range ``[H]`` is ``{1, ..., H}``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ArgumentError, NumericalInstabilityError, ResourceError
from .polyalg import MultiPoly
from .sieve import CyclicFn

log = logging.getLogger(__name__)

CLAMP_TOL = 1e-12
EXACT_BUDGET = 5 * 10**8
EXACT_BOX_DIM = 4


def _root(power: float, k: int, what: str = "norm") -> float:
    """``power^(1/k)`` for a quantity that is non-negative in exact arithmetic."""
    if power < 0:
        if power >= -CLAMP_TOL:
            log.warning("clamping %s power %.3e to 0", what, power)
            return 0.0
        raise NumericalInstabilityError(f"{what} power is {power:.6e} < 0")
    return float(power) ** (1.0 / k)


# ---------------------------------------------------------------------------
# box norms


def _box_power_batched(F: np.ndarray) -> np.ndarray:
    """``||F_b||_box^(2^d)`` for every slice ``F[b]`` of a batch of shape ``(B, L_1, ..., L_d)``.

    Uses ``||F||^(2^d) = E_{a, a'} ||F(a, .) F(a', .)||^(2^(d-1))`` along the
    first axis, which keeps the intermediate tensors at ``L^(2d)`` entries.
    """
    if F.ndim == 1:
        return F
    B, L = F.shape[0], F.shape[1]
    rest = F.shape[2:]
    P = F[:, :, None, ...] * F[:, None, :, ...]
    P = P.reshape((B * L * L,) + rest)
    inner = _box_power_batched(P)
    return inner.reshape(B, L * L).mean(axis=1)


def box_norm_power(F: np.ndarray) -> float:
    """``||F||_box^(2^|A|)`` without taking the root."""
    F = np.asarray(F, dtype=float)
    if F.size == 0:
        raise ArgumentError("index sets must be non-empty")
    return float(_box_power_batched(F[None, ...])[0])


def box_norm(F: np.ndarray, exact_dim: int = EXACT_BOX_DIM) -> float:
    """Gowers box norm of a real tensor indexed by ``X_1 x ... x X_A``.

    A 0-dimensional tensor returns its single value; a vector returns
    ``|E F|``.
    """
    F = np.asarray(F, dtype=float)
    if F.ndim > exact_dim:
        raise ResourceError(f"box norm of a {F.ndim}-dimensional tensor exceeds the exact limit {exact_dim}")
    if F.ndim == 0:
        return float(F)
    return _root(box_norm_power(F), 2 ** F.ndim, "box norm")


# ---------------------------------------------------------------------------
# local and averaged local Gowers norms


def _check_f(f) -> CyclicFn:
    if not isinstance(f, CyclicFn):
        raise ArgumentError("expected a CyclicFn")
    return f


def _corner_tensor(f: CyclicFn, steps: Sequence[int], L: int) -> np.ndarray:
    """``F[x, m_1..m_d] = f(x - sum a_i m_i)`` for ``m_i`` in ``1..L``."""
    N = f.N
    d = len(steps)
    m = np.arange(1, L + 1, dtype=np.int64)
    offset = np.zeros((L,) * d, dtype=np.int64)
    for i, a in enumerate(steps):
        shape = [1] * d
        shape[i] = L
        offset = offset + (int(a) % N) * m.reshape(shape)
    idx = (np.arange(N, dtype=np.int64).reshape((N,) + (1,) * d) - offset[None, ...]) % N
    return f.values[idx]


def local_gowers_power(f: CyclicFn, steps: Sequence[int], L: int) -> float:
    """``||f||^(2^d)`` for the local norm with the given steps and range ``L``."""
    f = _check_f(f)
    d = len(steps)
    if d < 1:
        raise ArgumentError("need at least one step")
    if L < 1:
        raise ArgumentError("range must be >= 1")
    if f.N * L ** (2 * d) > EXACT_BUDGET:
        raise ResourceError("exact local Gowers evaluation exceeds budget; use sampled mode")
    F = _corner_tensor(f, steps, L)
    return float(_box_power_batched(F).mean())


def local_gowers(f: CyclicFn, steps: Sequence[int], L: int) -> float:
    """Local Gowers norm with steps ``a_1..a_d`` over shifts in ``[L]``.

    Computed as the ``x``-average of ``||F_x||_box^(2^d)`` with
    ``F_x(m) = f(x - sum a_i m_i)``.  Steps that all vanish mod ``N`` make the
    norm collapse to ``(E f^(2^d))^(1/2^d)``; a warning is logged.
    """
    if all(int(a) % f.N == 0 for a in steps):
        log.warning("all steps vanish mod N; the local norm is degenerate")
    return _root(local_gowers_power(f, steps, L), 2 ** len(steps), "local Gowers")


@dataclass(frozen=True)
class GowersSpec:
    """Data of an averaged local Gowers norm.

    ``Qvec`` holds polynomials in ``t + 1`` variables ordered
    ``(h_1, ..., h_t, W)``; ``W`` is replaced by ``W_value`` on evaluation.
    """

    d: int
    t: int
    Qvec: tuple[MultiPoly, ...]
    H: int
    W_value: int
    sqrtM: int

    def __post_init__(self):
        object.__setattr__(self, "Qvec", tuple(self.Qvec))
        if self.d < 1:
            raise ArgumentError("d must be >= 1")
        if self.t < 0:
            raise ArgumentError("t must be >= 0")
        if len(self.Qvec) != self.d:
            raise ArgumentError(f"Qvec has {len(self.Qvec)} entries, expected d = {self.d}")
        for Q in self.Qvec:
            if Q.nvars != self.t + 1:
                raise ArgumentError(f"each Q must have t + 1 = {self.t + 1} variables")
            if Q.is_zero():
                raise ArgumentError("components of Qvec must not vanish")
        if self.H < 1 or self.sqrtM < 1:
            raise ArgumentError("H and sqrtM must be >= 1")

    @classmethod
    def constant(cls, steps: Sequence[int], sqrtM: int, H: int = 1, W_value: int = 1) -> "GowersSpec":
        """A ``t = 0`` spec with fixed integer steps."""
        return cls(len(steps), 0, tuple(MultiPoly.const(1, int(a)) for a in steps), H, W_value, sqrtM)

    def fine_points(self) -> np.ndarray:
        """All ``h`` in ``[H]^t`` as rows (one empty row when ``t = 0``)."""
        if self.t == 0:
            return np.zeros((1, 0), dtype=np.int64)
        grid = itertools.product(range(1, self.H + 1), repeat=self.t)
        return np.array(list(grid), dtype=np.int64)

    def steps(self, h: Sequence[int]) -> tuple[int, ...]:
        pt = [int(v) for v in h] + [self.W_value]
        return tuple(Q.evaluate(pt) for Q in self.Qvec)

    def step_table(self) -> np.ndarray:
        """Integer steps for every fine point, shape ``(H^t, d)``."""
        return np.array([self.steps(h) for h in self.fine_points()], dtype=object)


def concatenate_specs(*specs: GowersSpec) -> GowersSpec:
    """Concatenation ``Q_1 (+) ... (+) Q_k`` with disjoint fine variables and shared ``W``."""
    if not specs:
        raise ArgumentError("need at least one spec")
    H, Wv, L = specs[0].H, specs[0].W_value, specs[0].sqrtM
    if any((s.H, s.W_value, s.sqrtM) != (H, Wv, L) for s in specs):
        raise ArgumentError("specs must share H, W_value and sqrtM")
    t = sum(s.t for s in specs)
    Qs = []
    offset = 0
    for s in specs:
        positions = list(range(offset, offset + s.t)) + [t]
        Qs.extend(Q.embed(t + 1, positions) for Q in s.Qvec)
        offset += s.t
    return GowersSpec(len(Qs), t, tuple(Qs), H, Wv, L)


@dataclass
class GowersEstimate:
    value: float
    power: float
    stderr: float
    mode: str
    samples: int
    seed: int | None = None
    degenerate_steps: int = 0


def gowers_estimate(f: CyclicFn, spec: GowersSpec, mode: str = "exact", samples: int = 200_000,
                    seed: int = 0) -> GowersEstimate:
    """Averaged local Gowers norm with an error report.

    Exact mode enumerates everything; sampled mode draws ``(h, m0, m1, x)``
    uniformly from a seeded generator and reports the standard error of the
    ``2^d``-th power.
    """
    f = _check_f(f)
    d, L = spec.d, spec.sqrtM
    hs = spec.fine_points()
    steps = [spec.steps(h) for h in hs]
    degenerate = sum(all(a % f.N == 0 for a in s) for s in steps)
    if mode == "exact":
        if len(hs) * L ** (2 * d) * f.N > EXACT_BUDGET:
            raise ResourceError("exact averaged Gowers evaluation exceeds budget; use mode='sampled'")
        powers = [local_gowers_power(f, s, L) for s in steps]
        power = math.fsum(powers) / len(powers)
        return GowersEstimate(_root(power, 2 ** d, "averaged Gowers"), power, 0.0, "exact",
                              len(hs) * L ** (2 * d) * f.N, None, degenerate)
    if mode != "sampled":
        raise ArgumentError("mode must be 'exact' or 'sampled'")
    if samples < 2:
        raise ArgumentError("need at least two samples")
    rng = np.random.default_rng(seed)
    step_arr = np.array([[a % f.N for a in s] for s in steps], dtype=np.int64)
    hi = rng.integers(0, len(hs), size=samples)
    m0 = rng.integers(1, L + 1, size=(samples, d))
    m1 = rng.integers(1, L + 1, size=(samples, d))
    x = rng.integers(0, f.N, size=samples)
    a = step_arr[hi]
    prod = np.ones(samples)
    for omega in itertools.product((0, 1), repeat=d):
        m = np.where(np.array(omega, dtype=bool)[None, :], m1, m0)
        shift = (m * a).sum(axis=1)
        prod *= f.values[(x - shift) % f.N]
    power = float(prod.mean())
    stderr = float(prod.std(ddof=1) / math.sqrt(samples))
    value = max(power, 0.0) ** (1.0 / 2 ** d)
    return GowersEstimate(value, power, stderr, "sampled", samples, seed, degenerate)


def avg_local_gowers(f: CyclicFn, spec: GowersSpec, mode: str = "exact", samples: int = 200_000,
                     seed: int = 0) -> float:
    """``(E_h ||f||_{U^{Q(h, W)}}^(2^d))^(1/2^d)``."""
    return gowers_estimate(f, spec, mode, samples, seed).value


# ---------------------------------------------------------------------------
# dual functions


def _difference_weights(L: int) -> tuple[np.ndarray, np.ndarray]:
    """Differences ``u = m1 - m0`` over ``[L]^2`` with their probabilities ``(L - |u|)/L^2``."""
    u = np.arange(-(L - 1), L, dtype=np.int64)
    return u, (L - np.abs(u)) / float(L * L)


def _dual_for_steps(values: np.ndarray, steps: Sequence[int], L: int) -> np.ndarray:
    N = len(values)
    d = len(steps)
    u, wt = _difference_weights(L)
    x = np.arange(N, dtype=np.int64)
    omegas = [w for w in itertools.product((0, 1), repeat=d) if any(w)]
    out = np.zeros(N)
    for combo in itertools.product(range(len(u)), repeat=d):
        weight = float(np.prod(wt[list(combo)]))
        shifts = [int(u[c]) * int(a) for c, a in zip(combo, steps)]
        prod = np.ones(N)
        for omega in omegas:
            s = sum(sh for sh, o in zip(shifts, omega) if o)
            prod *= values[(x - s) % N]
        out += weight * prod
    return out


def dual_function(f: CyclicFn, spec: GowersSpec) -> CyclicFn:
    """Dual function: the average over ``h`` and ``m0, m1`` of the corner product without the ``0`` corner.

    Only the differences ``m1 - m0`` matter, so each coordinate is summed
    over ``u`` in ``(-L, L)`` with weight ``(L - |u|)/L^2``.  This route is
    independent of the box-norm evaluation of the norm itself.
    """
    f = _check_f(f)
    hs = spec.fine_points()
    cost = len(hs) * (2 * spec.sqrtM - 1) ** spec.d * f.N * (2 ** spec.d - 1)
    if cost > EXACT_BUDGET:
        raise ResourceError(f"dual function needs ~{cost} operations, budget is {EXACT_BUDGET}")
    acc = np.zeros(f.N)
    for h in hs:
        acc += _dual_for_steps(f.values, spec.steps(h), spec.sqrtM)
    return CyclicFn(f.N, acc / len(hs))


@dataclass
class BadSet:
    """Global bad set ``{x : D nu(x) >= 2^(2^d)}``."""

    N: int
    mask: np.ndarray
    threshold: float

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def mass(self, weight: CyclicFn | None = None) -> float:
        """``E_x 1_bad(x) weight(x)``; plain density when no weight is given."""
        if weight is None:
            return self.size / self.N
        return float((weight.values * self.mask).sum() / self.N)


def bad_set(nu_fn: CyclicFn, spec: GowersSpec, D_nu: CyclicFn | None = None) -> BadSet:
    thr = float(2 ** (2 ** spec.d))
    if D_nu is None:
        D_nu = dual_function(nu_fn, spec)
    return BadSet(nu_fn.N, D_nu.values >= thr, thr)


def modified_dual(f: CyclicFn, nu_fn: CyclicFn, spec: GowersSpec,
                  omega: BadSet | None = None) -> tuple[CyclicFn, BadSet]:
    """``(1 - 1_bad) Df`` together with the bad set derived from ``D nu``.

    Pass a precomputed ``omega`` to avoid recomputing ``D nu``.
    """
    if f.N != nu_fn.N:
        raise ArgumentError("f and nu must share N")
    if omega is None:
        omega = bad_set(nu_fn, spec)
    Df = dual_function(f, spec)
    return CyclicFn(f.N, np.where(omega.mask, 0.0, Df.values)), omega


def fundamental_identity(f: CyclicFn, spec: GowersSpec) -> tuple[float, float]:
    """``(int f Df, ||f||^(2^d))`` computed by the two independent routes."""
    Df = dual_function(f, spec)
    lhs = math.fsum((f.values * Df.values).tolist()) / f.N
    return lhs, gowers_estimate(f, spec, "exact").power


@dataclass
class MomentReport:
    K: int
    moment: float
    bound: float

    @property
    def within(self) -> bool:
        return self.moment <= self.bound


def moment_report(f: CyclicFn, nu_fn: CyclicFn, spec: GowersSpec, K: int,
                  Df: CyclicFn | None = None) -> MomentReport:
    """``int |Df|^K (nu + 1)`` against ``2 (2^(2^d - 1))^K``; report only."""
    if K < 1:
        raise ArgumentError("K must be >= 1")
    if Df is None:
        Df = dual_function(f, spec)
    m = float(np.mean(np.abs(Df.values) ** K * (nu_fn.values + 1.0)))
    return MomentReport(K, m, 2.0 * float(2 ** (2 ** spec.d - 1)) ** K)


# ---------------------------------------------------------------------------
# inequality suite


@dataclass
class InequalityReport:
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def holds(self, tol: float = 1e-12) -> bool:
        return self.lhs <= self.rhs + tol


def _corner_index_grid(shape: Sequence[int]) -> list[np.ndarray]:
    """Index arrays for all ``(m^(0), m^(1))`` pairs; entry ``2i + e`` is ``m^(e)_i``."""
    axes = []
    for n in shape:
        axes.extend([np.arange(n), np.arange(n)])
    return [g.ravel() for g in np.meshgrid(*axes, indexing="ij")]


def _corner(grid: list[np.ndarray], omega: Sequence[int], axes: Sequence[int]) -> tuple[np.ndarray, ...]:
    return tuple(grid[2 * a + o] for a, o in zip(axes, omega))


def csg_check(f_omegas: Sequence[np.ndarray]) -> InequalityReport:
    """Cauchy-Schwarz-Gowers: ``|E prod_w f_w(m^w)| <= prod_w ||f_w||_box``.

    ``f_omegas`` lists ``2^|A|`` tensors in the lexicographic order of
    ``w`` in ``{0,1}^A``.
    """
    tensors = [np.asarray(F, dtype=float) for F in f_omegas]
    A = tensors[0].ndim
    if len(tensors) != 2 ** A or any(F.shape != tensors[0].shape for F in tensors):
        raise ArgumentError("need 2^|A| tensors of identical shape")
    grid = _corner_index_grid(tensors[0].shape)
    prod = np.ones(len(grid[0]))
    for F, omega in zip(tensors, itertools.product((0, 1), repeat=A)):
        prod *= F[_corner(grid, omega, range(A))]
    lhs = abs(float(prod.mean()))
    rhs = float(np.prod([abs(box_norm(F)) for F in tensors]))
    return InequalityReport(lhs, rhs)


def weighted_box_power(f: np.ndarray, nus: Sequence[np.ndarray]) -> float:
    """``||f||_{box(nu)}^(2^|A|)``; ``nus[a]`` is indexed by the axes other than ``a``."""
    f = np.asarray(f, dtype=float)
    A = f.ndim
    grid = _corner_index_grid(f.shape)
    prod = np.ones(len(grid[0]))
    for omega in itertools.product((0, 1), repeat=A):
        prod *= f[_corner(grid, omega, range(A))]
    for a, nu_a in enumerate(nus):
        others = [b for b in range(A) if b != a]
        nu_a = np.asarray(nu_a, dtype=float)
        for omega in itertools.product((0, 1), repeat=A - 1):
            prod *= nu_a[_corner(grid, omega, others)] if others else nu_a
    return float(prod.mean())


def weighted_gvn_check(f: np.ndarray, f_alpha: Sequence[np.ndarray],
                       nu_alpha: Sequence[np.ndarray]) -> InequalityReport:
    """Weighted generalized von Neumann inequality on one instance.

    ``f_alpha[a]`` and ``nu_alpha[a]`` are indexed by the axes of ``f`` other
    than ``a`` (in order) and must satisfy ``|f_alpha| <= nu_alpha``.
    """
    f = np.asarray(f, dtype=float)
    A = f.ndim
    if A < 1 or len(f_alpha) != A or len(nu_alpha) != A:
        raise ArgumentError("need one (f_alpha, nu_alpha) pair per axis")
    for fa, na in zip(f_alpha, nu_alpha):
        fa, na = np.asarray(fa, dtype=float), np.asarray(na, dtype=float)
        if fa.shape != na.shape or np.any(na < 0) or np.any(np.abs(fa) > na):
            raise ArgumentError("pointwise domination |f_alpha| <= nu_alpha violated")
    idx = np.indices(f.shape)
    total = f.copy()
    for a, fa in enumerate(f_alpha):
        others = tuple(idx[b] for b in range(A) if b != a)
        total = total * (np.asarray(fa, dtype=float)[others] if others else float(fa))
    lhs = abs(float(total.mean()))
    rhs = abs(weighted_box_power(f, nu_alpha)) ** (1.0 / 2 ** A)
    for na in nu_alpha:
        na = np.asarray(na, dtype=float)
        rhs *= math.sqrt(abs(box_norm(na)) if na.ndim else abs(float(na)))
    return InequalityReport(lhs, rhs)


@dataclass
class WeightedBoxReport:
    csg: InequalityReport
    gvn: InequalityReport

    def holds(self, tol: float = 1e-12) -> bool:
        return self.csg.holds(tol) and self.gvn.holds(tol)


def weighted_box_check(f: np.ndarray, f_alpha: Sequence[np.ndarray], nu_alpha: Sequence[np.ndarray],
                       f_omegas: Sequence[np.ndarray] | None = None) -> WeightedBoxReport:
    """Both inequalities on one instance.

    Without ``f_omegas`` the CSG side uses ``f`` at every corner, which is
    the equality case.
    """
    if f_omegas is None:
        f_omegas = [f] * (2 ** np.asarray(f).ndim)
    return WeightedBoxReport(csg_check(f_omegas), weighted_gvn_check(f, f_alpha, nu_alpha))


def domination_check(g: CyclicFn, specs: Sequence[GowersSpec]) -> list[InequalityReport]:
    """``||g||_{Q_i} <= ||g||_{Q_1 (+) ... (+) Q_k}`` for every ``i``."""
    big = avg_local_gowers(g, concatenate_specs(*specs))
    return [InequalityReport(avg_local_gowers(g, s), big) for s in specs]


@dataclass
class VdcReport:
    lhs: float
    main: float
    boundary: float

    @property
    def bound(self) -> float:
        return (math.sqrt(max(self.main, 0.0)) + abs(self.boundary)) ** 2

    def holds(self, tol: float = 1e-12) -> bool:
        return self.lhs <= self.bound + tol


def vdc_check(x: Sequence[float], M: int, H: int) -> VdcReport:
    """van der Corput on a finite sequence ``x_1, ..., x_{M+H}``.

    Returns ``|E_m x_m|^2``, the differenced average
    ``E_{h,h'} E_m x_{m+h} x_{m+h'}`` and the boundary term
    ``E_m x_m - E_h E_m x_{m+h}``.  Cauchy-Schwarz gives
    ``lhs <= (sqrt(main) + |boundary|)^2`` with constant one.
    """
    arr = np.asarray(x, dtype=float)
    if len(arr) < M + H:
        raise ArgumentError(f"sequence must have at least M + H = {M + H} terms")
    if M < 1 or H < 1:
        raise ArgumentError("M and H must be >= 1")
    base = arr[:M].mean()
    # y[h-1, m-1] = x_{m+h}, 1-based
    y = np.stack([arr[h:h + M] for h in range(1, H + 1)])
    avg_h = y.mean(axis=0)
    main = float((avg_h * avg_h).mean())
    boundary = float(base - avg_h.mean())
    return VdcReport(float(base * base), main, boundary)
