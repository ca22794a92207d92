"""Prime tables, W-trick parameters, the smooth cutoff, and the sieve majorant.

The majorant is the squared truncated divisor sum

    nu(x) = (phi(W)/W) log R (sum_{m | Wx+b} mu(m) chi(log m / log R))^2

on ``x in [N]``.  Functions on ``Z_N`` are stored residue-indexed: entry
``r`` holds the value at the representative of ``r`` in ``{1, ..., N}``
(so entry 0 is the value at ``x = N``).
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.signal import fftconvolve
from sklearn.base import BaseEstimator, TransformerMixin

from .convexlat import Box, ConvexBody, lattice_points
from .errors import ArgumentError, ResourceError
from .polyalg import MultiPoly, classify_prime

MAX_TABLE_LIMIT = 10**9
CACHE_MAGIC = b"PPLT"
CACHE_VERSION = 1


# ---------------------------------------------------------------------------
# prime tables


@dataclass
class PrimeTable:
    limit: int
    spf: np.ndarray
    mu: np.ndarray
    primes: np.ndarray

    def is_prime(self, n) -> np.ndarray | bool:
        n = np.asarray(n)
        ok = (n >= 2) & (n <= self.limit)
        if np.any((n > self.limit)):
            raise ResourceError(f"value exceeds prime table limit {self.limit}")
        out = np.zeros(n.shape, dtype=bool)
        idx = n[ok]
        out[ok] = self.spf[idx] == idx
        return bool(out) if out.ndim == 0 else out

    def factor(self, n: int) -> list[tuple[int, int]]:
        if not 1 <= n <= self.limit:
            raise ResourceError(f"{n} outside prime table range [1, {self.limit}]")
        out = []
        while n > 1:
            p = int(self.spf[n])
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        return out

    def squarefree_divisors(self, n: int) -> list[int]:
        divs = [1]
        for p, _ in self.factor(n):
            divs += [d * p for d in divs]
        return sorted(divs)

    def primes_below(self, x: float) -> np.ndarray:
        """Primes ``p < x``."""
        if x - 1 > self.limit:
            raise ResourceError(f"primes below {x} need a table up to {math.ceil(x) - 1}")
        return self.primes[self.primes < x]

    def save(self, path: str | Path) -> None:
        """Little-endian cache: magic, u32 version, u64 limit, u32 spf[0..limit]."""
        with open(path, "wb") as fh:
            fh.write(CACHE_MAGIC)
            fh.write(struct.pack("<IQ", CACHE_VERSION, self.limit))
            fh.write(self.spf.astype("<u4").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "PrimeTable":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != CACHE_MAGIC:
                raise ArgumentError(f"{path} is not a prime table cache")
            version, limit = struct.unpack("<IQ", fh.read(12))
            if version != CACHE_VERSION:
                raise ArgumentError(f"unsupported cache version {version}")
            spf = np.frombuffer(fh.read(4 * (limit + 1)), dtype="<u4").astype(np.int64)
        if len(spf) != limit + 1:
            raise ArgumentError("truncated prime table cache")
        return _table_from_spf(limit, spf)


def _table_from_spf(limit: int, spf: np.ndarray) -> PrimeTable:
    idx = np.arange(limit + 1)
    primes = idx[(idx >= 2) & (spf == idx)]
    mu = np.ones(limit + 1, dtype=np.int8)
    mu[0] = 0
    for p in primes:
        mu[p::p] *= -1
        if p * p <= limit:
            mu[p * p::p * p] = 0
    return PrimeTable(limit, spf, mu, primes.astype(np.int64))


def build_prime_table(limit: int, max_limit: int = MAX_TABLE_LIMIT) -> PrimeTable:
    """Smallest-prime-factor and Moebius tables on ``[0, limit]``."""
    limit = int(limit)
    if limit < 1:
        raise ArgumentError("limit must be positive")
    if limit > max_limit:
        raise ResourceError(f"table limit {limit} exceeds configured maximum {max_limit}")
    spf = np.arange(limit + 1, dtype=np.int64)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == p:
            block = spf[p * p::p]
            mask = block == np.arange(p * p, limit + 1, p)
            block[mask] = p
    return _table_from_spf(limit, spf)


def totient_of_primorial(w: int) -> tuple[int, int]:
    """``(W, phi(W))`` with ``W`` the product of primes below ``w``."""
    W = phi = 1
    for p in range(2, max(int(math.ceil(w)), 2)):
        if all(p % q for q in range(2, math.isqrt(p) + 1)):
            if p < w:
                W *= p
                phi *= p - 1
    return W, phi


# ---------------------------------------------------------------------------
# parameters

PrimeSet = Callable[[np.ndarray], np.ndarray]


def prime_set(table: PrimeTable, A=None) -> PrimeSet:
    """Membership predicate for ``A``: all primes (None), explicit values, or a predicate."""
    if A is None:
        return lambda n: table.is_prime(np.asarray(n))
    if callable(A):
        return lambda n: np.asarray(A(np.asarray(n)), dtype=bool) & table.is_prime(np.asarray(n))
    vals = np.unique(np.asarray(list(A), dtype=np.int64))
    if np.any(~table.is_prime(vals)):
        raise ArgumentError("explicit prime set contains non-primes")
    return lambda n: np.isin(np.asarray(n), vals)


@dataclass
class SieveParams:
    N_prime: int
    w: float
    W: int
    phi_W: int
    b: int
    N: int
    M: float | None
    R: float
    H: float | None
    eta: tuple[float, ...] | None = None
    delta0: float | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def normalizer(self) -> float:
        return self.phi_W / self.W * math.log(self.R)

    def table_limit(self) -> int:
        return self.W * self.N + self.b


def derive_params(N_prime: int, w: float, R: float | None = None, M: float | None = None,
                  H: float | None = None, eta: Sequence[float] | None = None,
                  A=None, table: PrimeTable | None = None, delta0: float | None = None,
                  check_hierarchy: bool = False) -> SieveParams:
    """W-trick parameters; ``b`` maximizes ``|{x <= N/2 : Wx+b in A}|`` (ties to smallest).

    Scales come either directly (``R``, ``M``, ``H``) or from ``eta`` via
    ``M = N^eta0``, ``R = N^eta2``, ``H = N^eta7``.
    """
    W, phi = totient_of_primorial(w)
    if W ** 4 > N_prime:
        raise ArgumentError(f"W = {W} exceeds N'^(1/4); choose a smaller w")
    N = N_prime // (2 * W)
    if N < 2:
        raise ArgumentError("N' too small for this w")
    if eta is not None:
        eta = tuple(float(e) for e in eta)
        if len(eta) != 8:
            raise ArgumentError("eta must list eta_0 .. eta_7")
        M = M if M is not None else N ** eta[0]
        R = R if R is not None else N ** eta[2]
        H = H if H is not None else N ** eta[7]
    if R is None or R <= 1:
        raise ArgumentError("sieve level R must exceed 1")
    if table is None or table.limit < W * (N // 2) + W:
        table = build_prime_table(W * (N // 2) + W)
    member = prime_set(table, A)
    xs = np.arange(1, N // 2 + 1, dtype=np.int64)
    best_b, best = None, -1
    for b in range(1, W + 1):
        if math.gcd(b, W) != 1:
            continue
        c = int(np.count_nonzero(member(W * xs + b)))
        if c > best:
            best_b, best = b, c
    assert best_b is not None, "no residue coprime to W"
    params = SieveParams(N_prime, w, W, phi, best_b, N, M, float(R), H, eta, delta0)
    chain = [("H", H), ("R", R), ("M", M), ("N", N)]
    present = [(k, v) for k, v in chain if v is not None]
    for (k1, v1), (k2, v2) in zip(present, present[1:]):
        if not v1 < v2:
            params.warnings.append(f"hierarchy violated: {k1} = {v1:.4g} is not below {k2} = {v2:.4g}")
    if H is not None and H <= 1:
        params.warnings.append("hierarchy violated: H <= 1")
    if check_hierarchy:
        for msg in params.warnings:
            warnings.warn(msg, stacklevel=2)
    return params


# ---------------------------------------------------------------------------
# cutoff


def _g(u):
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)


def _gprime(u):
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        safe = np.where(u > 0, u, 1.0)
        return np.where(u > 0, np.exp(-1.0 / safe) / safe ** 2, 0.0)


def _step(u):
    """Smooth monotone step from 0 (u <= 0) to 1 (u >= 1)."""
    u = np.clip(u, 0.0, 1.0)
    a, b = _g(u), _g(1.0 - u)
    return a / (a + b)


def _step_prime(u):
    inside = (u > 0) & (u < 1)
    uc = np.clip(u, 0.0, 1.0)
    a, b = _g(uc), _g(1.0 - uc)
    da, db = _gprime(uc), _gprime(1.0 - uc)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = (da * b + a * db) / (a + b) ** 2
    return np.where(inside, val, 0.0)


def _bump(t):
    t = np.abs(t)
    inside = t < 1
    s = np.where(inside, t, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - s * s)), 0.0)


def _bump_prime(t):
    inside = np.abs(t) < 1
    s = np.where(inside, t, 0.0)
    return np.where(inside, _bump(s) * (-2.0 * s / (1.0 - s * s) ** 2), 0.0)


SHAPES = ("bump", "smoothstep", "linear")


class CutoffChi:
    """Even cutoff supported in ``[-1, 1]`` normalized by ``int_0^1 chi'^2 = 1``."""

    def __init__(self, shape: str = "bump", plateau: float = 0.0, grid_size: int = 2001):
        if shape not in SHAPES:
            raise ArgumentError(f"unknown cutoff shape {shape!r}; choose from {SHAPES}")
        if not 0.0 <= plateau < 1.0:
            raise ArgumentError("plateau must lie in [0, 1)")
        self.shape = shape
        self.plateau = plateau
        raw = integrate.quad(lambda t: float(self._base_prime(np.array(t))) ** 2, 0.0, 1.0,
                             epsabs=1e-14, epsrel=1e-13, limit=400,
                             points=[plateau] if plateau > 0 else None)[0]
        if not np.isfinite(raw) or raw <= 0:
            raise ArgumentError("cutoff shape is not normalizable")
        self.constant = 1.0 / math.sqrt(raw)
        self.grid = np.linspace(-1.0, 1.0, grid_size)
        self.values = self(self.grid)
        self.derivative_values = self.derivative(self.grid)
        self.smooth = shape != "linear"

    def _base(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        if self.shape == "bump":
            return _bump(t)
        if self.shape == "linear":
            return np.clip(1.0 - t, 0.0, None)
        a = self.plateau
        return 1.0 - _step((t - a) / (1.0 - a))

    def _base_prime(self, t):
        t = np.asarray(t, dtype=float)
        sgn = np.sign(t)
        s = np.abs(t)
        if self.shape == "bump":
            return _bump_prime(t)
        if self.shape == "linear":
            return np.where(s < 1, -sgn, 0.0)
        a = self.plateau
        return -sgn * _step_prime((s - a) / (1.0 - a)) / (1.0 - a)

    def __call__(self, t):
        return self.constant * self._base(t)

    def derivative(self, t):
        return self.constant * self._base_prime(t)

    def at_zero(self) -> float:
        return float(self(0.0))

    def norm_integral(self) -> float:
        """``int_0^1 chi'(t)^2 dt`` by adaptive quadrature."""
        return integrate.quad(lambda t: float(self.derivative(np.array(t))) ** 2, 0.0, 1.0,
                              epsabs=1e-14, epsrel=1e-13, limit=400,
                              points=[self.plateau] if self.plateau > 0 else None)[0]

    def phi(self, xi, nodes: int = 512) -> np.ndarray:
        """``phi(xi) = (1/2pi) int e^x chi(x) e^{i x xi} dx`` by Gauss-Legendre quadrature.

        This is the density with ``e^x chi(x) = int phi(xi) e^{-i x xi} dxi``.
        """
        x, wts = np.polynomial.legendre.leggauss(nodes)
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        weight = wts * np.exp(x) * self(x)
        out = np.empty(xi.shape, dtype=complex)
        step = 4096
        for s in range(0, len(xi), step):
            out[s:s + step] = np.exp(1j * np.outer(xi[s:s + step], x)) @ weight
        return out / (2 * math.pi)

    def phi_identity(self, T: float = 400.0, h: float = 0.05) -> complex:
        """Double integral of ``(1+it)(1+it')/(2+it+it') phi(t) phi(t')``.

        Trapezoid rule on ``[-T, T]^2``.  The kernel depends on ``t+t'`` only,
        so the sum collapses to a convolution evaluated with an FFT.
        """
        n = int(round(2 * T / h)) + 1
        t = -T + h * np.arange(n)
        g = (1 + 1j * t) * self.phi(t)
        conv = fftconvolve(g, g)
        s = -2 * T + h * np.arange(len(conv))
        return complex(h * h * np.sum(conv / (2 + 1j * s)))


def make_cutoff(shape: str = "bump", **kwargs) -> CutoffChi:
    return CutoffChi(shape, **kwargs)


# ---------------------------------------------------------------------------
# cyclic functions


@dataclass
class CyclicFn:
    N: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.N,):
            raise ArgumentError(f"values must have shape ({self.N},)")
        if not np.all(np.isfinite(self.values)):
            raise ArgumentError("values must be finite")

    def mean(self) -> float:
        return math.fsum(self.values.tolist()) / self.N

    def shift(self, n: int) -> "CyclicFn":
        """``T^n g (x) = g(x - n)``."""
        return CyclicFn(self.N, np.roll(self.values, n))

    def on_interval(self) -> np.ndarray:
        """Array indexed by ``x in {0, ..., N}`` with slot ``x`` the value at ``x`` (slot 0 unused)."""
        out = np.empty(self.N + 1)
        out[1:] = np.roll(self.values, -1)
        out[0] = np.nan
        return out

    @classmethod
    def from_interval(cls, arr: np.ndarray) -> "CyclicFn":
        """Inverse of :meth:`on_interval`: ``arr[x]`` for ``x = 1..N``."""
        arr = np.asarray(arr, dtype=float)
        N = len(arr) - 1
        return cls(N, np.roll(arr[1:], 1))


# ---------------------------------------------------------------------------
# majorant and prime weight


def divisor_sum(params: SieveParams, chi: CutoffChi, table: PrimeTable) -> np.ndarray:
    """``sum_{m | Wx+b, m <= R} mu(m) chi(log m / log R)`` for ``x = 1..N`` (slot 0 unused).

    Divisors ``m`` coprime to ``W`` hit exactly one class ``x = -b/W (mod m)``;
    divisors sharing a prime with ``W`` never divide ``Wx+b``.
    """
    W, b, N, R = params.W, params.b, params.N, params.R
    if table.limit < W * N + b:
        raise ResourceError(f"prime table limit {table.limit} below W*N+b = {W * N + b}")
    logR = math.log(R)
    S = np.zeros(N + 1)
    for m in range(1, int(math.floor(R)) + 1):
        mu = int(table.mu[m])
        if mu == 0 or math.gcd(m, W) != 1:
            continue
        c = mu * float(chi(math.log(m) / logR))
        if c == 0.0:
            continue
        x0 = (-b * pow(W, -1, m)) % m if m > 1 else 0
        start = x0 if x0 >= 1 else m
        S[start::m] += c
    S[0] = 0.0
    return S


def nu(params: SieveParams, chi: CutoffChi, table: PrimeTable) -> CyclicFn:
    S = divisor_sum(params, chi, table)
    return CyclicFn.from_interval(params.normalizer * S * S)


def nu_reference(params: SieveParams, chi: CutoffChi, table: PrimeTable, xs: Sequence[int]) -> np.ndarray:
    """Direct evaluation by factoring ``Wx+b``; slow, used as an oracle."""
    logR = math.log(params.R)
    out = []
    for x in xs:
        n = params.W * int(x) + params.b
        s = 0.0
        for m in table.squarefree_divisors(n):
            if m <= params.R:
                s += int(table.mu[m]) * float(chi(math.log(m) / logR))
        out.append(params.normalizer * s * s)
    return np.array(out)


def prime_weight_f(params: SieveParams, table: PrimeTable, A=None, chi: CutoffChi | None = None,
                   literal: bool = False) -> CyclicFn:
    """Normalized counting function of ``A`` on the residue class ``Wx+b``.

    The default weight is ``(phi(W)/W) log R chi(0)^2`` on
    ``{x <= N/2 : Wx+b in A, Wx+b > R}``, which is the value the majorant
    takes at such ``x``, so ``f <= nu`` holds exactly for any normalized
    cutoff.  ``literal=True`` drops the ``chi(0)^2`` factor and the ``> R``
    restriction; that variant only sits below the majorant when ``chi(0) = 1``.
    """
    W, b, N = params.W, params.b, params.N
    if table.limit < W * N + b:
        raise ResourceError(f"prime table limit {table.limit} below W*N+b = {W * N + b}")
    member = prime_set(table, A)
    xs = np.arange(1, N + 1, dtype=np.int64)
    n = W * xs + b
    mask = (xs <= N // 2) & member(n)
    if literal:
        weight = params.normalizer
    else:
        if chi is None:
            raise ArgumentError("chi is required unless literal=True")
        mask &= n > params.R
        c = chi.at_zero()
        # same operation order as nu so the comparison is exact in floating point
        weight = params.normalizer * c * c
    arr = np.zeros(N + 1)
    arr[1:] = np.where(mask, weight, 0.0)
    return CyclicFn.from_interval(arr)


@dataclass
class MajorantCheck:
    holds: bool
    violations: int
    worst_gap: float


def check_majorant(f: CyclicFn, nu_fn: CyclicFn) -> MajorantCheck:
    """Exact pointwise comparison ``f <= nu``."""
    gap = f.values - nu_fn.values
    bad = gap > 0
    return MajorantCheck(not bool(bad.any()), int(bad.sum()), float(gap.max()) if len(gap) else 0.0)


def divisor_count_bound(params: SieveParams, table: PrimeTable, nu_fn: CyclicFn) -> bool:
    """Check ``nu(x) <= (phi(W)/W) log R tau(Wx+b)^2`` for every ``x``."""
    vals = nu_fn.on_interval()
    for x in range(1, params.N + 1):
        tau = 1
        for _, e in table.factor(params.W * x + params.b):
            tau *= e + 1
        if vals[x] > params.normalizer * tau * tau * (1 + 1e-12):
            return False
    return True


# ---------------------------------------------------------------------------
# correlation estimators


@dataclass
class PolyformReport:
    value: float
    h_count: int
    window: tuple[int, int]
    bad_primes: dict
    terrible: bool
    sum_inv_bad: float
    exp_term: float
    prediction: float


def _shift_table(polys: Sequence[MultiPoly], pts: np.ndarray) -> np.ndarray:
    return np.array([[P.evaluate(tuple(int(v) for v in h)) for P in polys] for h in pts], dtype=np.int64).reshape(len(pts), len(polys))


def polyform_average(nu_fn: CyclicFn, polys: Sequence[MultiPoly], body: ConvexBody,
                     params: SieveParams | None = None, x_window: tuple[int, int] | None = None,
                     prime_cutoff: int = 1000) -> PolyformReport:
    """``E_h E_{x in X'} prod_j nu(x + Q_j(h))`` over the truncated window ``X'``.

    ``nu`` is read as a function on the integers ``1..N``; the window is
    chosen (or checked) so that no shift leaves that interval.
    """
    N = nu_fn.N
    arr = nu_fn.on_interval()
    J = len(polys)
    if J == 0:
        return PolyformReport(1.0, 0, (1, N), {}, False, 0.0, 0.0, 1.0)
    d = polys[0].nvars
    if body.dim != d:
        raise ArgumentError("body dimension must match the number of polynomial variables")
    pts = lattice_points(body, 1, 0, enumerate_points=True).points
    if len(pts) == 0:
        raise ArgumentError("body contains no lattice points")
    shifts = _shift_table(polys, pts)
    lo_need = 1 - int(shifts.min())
    hi_need = N - int(shifts.max())
    if x_window is None:
        x_window = (max(1, lo_need), min(N, hi_need))
    a, b = x_window
    if a < lo_need or b > hi_need or a > b:
        raise ArgumentError(
            f"window {x_window} lets shifts wrap around; shifts span [{shifts.min()}, {shifts.max()}] for N = {N}"
        )
    xs = np.arange(a, b + 1)
    acc = []
    for row in shifts:
        prod = np.ones(len(xs))
        for s in row:
            prod *= arr[xs + s]
        acc.append(math.fsum(prod.tolist()) / len(xs))
    value = math.fsum(acc) / len(acc)
    bad, terrible, sinv = {}, False, 0.0
    if params is not None:
        bad, terrible, sinv = _bad_prime_scan(params, polys, prime_cutoff)
    exp_term = EXP(sinv)
    prediction = 0.0 if terrible else 1.0
    return PolyformReport(value, len(pts), (a, b), bad, terrible, sinv, exp_term, prediction)


def _bad_prime_scan(params: SieveParams, polys: Sequence[MultiPoly], cutoff: int):
    """Classify ``w <= p <= cutoff`` for the forms ``W (x + Q_j(h)) + b``."""
    d = polys[0].nvars
    forms = []
    for Q in polys:
        lifted = Q.embed(d + 1, list(range(1, d + 1)))
        forms.append(params.W * (MultiPoly.var(d + 1, 0) + lifted) + params.b)
    bad, terrible, sinv = {}, False, 0.0
    cutoff = min(int(cutoff), 10**6)
    for p in range(max(2, math.ceil(params.w)), cutoff + 1):
        if not all(p % q for q in range(2, math.isqrt(p) + 1)):
            continue
        cls = classify_prime(p, forms)
        if not cls.is_good:
            bad[p] = cls
            sinv += 1.0 / p
            terrible |= cls.is_terrible
    return bad, terrible, sinv


@dataclass
class PolycorSpec:
    """Vector polynomials in ``h`` (``D''`` variables).

    ``P[j]`` has length ``D``; ``Q[j][k]`` and ``S[l]`` have length ``D'``.
    """

    P: list
    Q: list
    S: list
    Omega: Box | None
    Omega1: Box | None
    Omega2: Box | None


@dataclass
class PolycorReport:
    value: float
    std_error: float
    exact: bool
    samples: int
    seed: int | None


def _parallel(u: Sequence[MultiPoly], v: Sequence[MultiPoly]) -> bool:
    for a in range(len(u)):
        for b in range(a + 1, len(u)):
            if not (u[a] * v[b] - u[b] * v[a]).is_zero():
                return False
    return True


def check_polycor_spec(spec: PolycorSpec, coeff_bound: float | None = None) -> None:
    J, K = len(spec.P), (len(spec.Q[0]) if spec.Q else 0)
    for j in range(J):
        if len(spec.Q[j]) != K:
            raise ArgumentError("every P_j needs the same number K of Q_{j,k}")
    for k in range(K):
        for j in range(J):
            for j2 in range(j + 1, J):
                u = list(spec.P[j]) + list(spec.Q[j][k])
                v = list(spec.P[j2]) + list(spec.Q[j2][k])
                if _parallel(u, v):
                    raise ArgumentError(f"non-degeneracy bullet 1: (P_{j+1}, Q_{j+1},{k+1}) and (P_{j2+1}, Q_{j2+1},{k+1}) are parallel")
    if coeff_bound is not None:
        for vec in list(spec.P) + list(spec.S):
            for poly in vec:
                if any(abs(c) > coeff_bound for _, c in poly.items()):
                    raise ArgumentError("non-degeneracy bullet 2: coefficient exceeds bound")
    seen = set()
    for l, vec in enumerate(spec.S):
        key = tuple(vec)
        if key in seen:
            raise ArgumentError(f"non-degeneracy bullet 3: S_{l+1} repeats an earlier S_l")
        seen.add(key)


def polycor_average(nu_fn: CyclicFn, spec: PolycorSpec, budget: int = 2_000_000,
                    samples: int = 20_000, seed: int = 0, coeff_bound: float | None = None,
                    x_window: tuple[int, int] | None = None) -> PolycorReport:
    """Nested correlation average; exact when the full enumeration fits ``budget``."""
    check_polycor_spec(spec, coeff_bound)
    J, L = len(spec.P), len(spec.S)
    K = len(spec.Q[0]) if spec.Q else 0
    if K == 0 and L == 0:
        return PolycorReport(1.0, 0.0, True, 0, None)
    N = nu_fn.N
    arr = nu_fn.on_interval()

    def pts(body):
        if body is None:
            return np.zeros((1, 0), dtype=np.int64)
        return lattice_points(body, 1, 0, enumerate_points=True).points

    ms, ns, hs = pts(spec.Omega if K else None), pts(spec.Omega1), pts(spec.Omega2)

    def ev(vec, h):
        ht = tuple(int(v) for v in h)
        return np.array([p.evaluate(ht) for p in vec], dtype=np.int64)

    # shift extremes over the whole index set decide the window
    lo = hi = 0
    cache = {}
    for h in hs:
        Pv = [ev(P, h) for P in spec.P]
        Qv = [[ev(Q, h) for Q in row] for row in spec.Q]
        Sv = [ev(S, h) for S in spec.S]
        cache[tuple(h)] = (Pv, Qv, Sv)
        for n in ns:
            for k in range(K):
                for j in range(J):
                    sh = ms @ Pv[j] + Qv[j][k] @ n if len(Pv[j]) else np.full(len(ms), Qv[j][k] @ n)
                    lo, hi = min(lo, int(sh.min())), max(hi, int(sh.max()))
            for l in range(L):
                s = int(Sv[l] @ n) if len(n) else 0
                lo, hi = min(lo, s), max(hi, s)
    need = (1 - lo, N - hi)
    if x_window is None:
        x_window = (max(1, need[0]), min(N, need[1]))
    if x_window[0] < need[0] or x_window[1] > need[1] or x_window[0] > x_window[1]:
        raise ArgumentError(f"window {x_window} lets shifts wrap around")
    xs = np.arange(x_window[0], x_window[1] + 1)

    def integrand(n, h, x):
        Pv, Qv, Sv = cache[tuple(h)]
        val = np.ones(len(x))
        for k in range(K):
            inner = np.zeros(len(x))
            for m in ms:
                prod = np.ones(len(x))
                for j in range(J):
                    s = int(m @ Pv[j]) + int(Qv[j][k] @ n)
                    prod *= arr[x + s]
                inner += prod
            val *= inner / len(ms)
        for l in range(L):
            val *= arr[x + int(Sv[l] @ n)]
        return val

    work = len(ns) * len(hs) * len(xs) * max(1, K * len(ms) * J)
    if work <= budget:
        tot = []
        for n in ns:
            for h in hs:
                tot.append(math.fsum(integrand(n, h, xs).tolist()) / len(xs))
        return PolycorReport(math.fsum(tot) / len(tot), 0.0, True, len(tot) * len(xs), None)
    rng = np.random.default_rng(seed)
    vals = np.empty(samples)
    ni = rng.integers(0, len(ns), samples)
    hi_ = rng.integers(0, len(hs), samples)
    xi = rng.integers(0, len(xs), samples)
    for s in range(samples):
        vals[s] = integrand(ns[ni[s]], hs[hi_[s]], xs[xi[s]:xi[s] + 1])[0]
    return PolycorReport(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)), False, samples, seed)


# ---------------------------------------------------------------------------
# prime sums


def EXP(x: float) -> float:
    return max(math.exp(x) - 1.0, 0.0)


def mertens_sum(x: float, table: PrimeTable) -> float:
    """``sum_{p < x} 1/p``."""
    return math.fsum((1.0 / table.primes_below(x)).tolist())


def log_power_sum(primes: Sequence[int], K: float) -> float:
    """``sum_p log^K p / p`` over the given primes."""
    return math.fsum(math.log(p) ** K / p for p in primes)


@dataclass
class ExplogCheck:
    lhs: float
    rhs_sum: float
    witness_constant: float


def explog_check(primes: Sequence[int], K: int) -> ExplogCheck:
    """Smallest ``C_K`` with ``EXP(K sum 1/p) <= C_K sum log^K p / p`` on this set."""
    lhs = EXP(K * math.fsum(1.0 / p for p in primes))
    rhs = log_power_sum(primes, K)
    return ExplogCheck(lhs, rhs, lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf))


def prime_sums(kind: str, x: float | None = None, table: PrimeTable | None = None,
               primes: Sequence[int] | None = None, K: int = 1):
    """Dispatch for ``Mertens``, ``LogPower`` and ``EXPcheck``."""
    kind = kind.lower()
    if kind == "mertens":
        return mertens_sum(x, table)
    if kind == "logpower":
        ps = primes if primes is not None else table.primes_below(x)
        return log_power_sum(ps, K)
    if kind == "expcheck":
        ps = primes if primes is not None else table.primes_below(x)
        return explog_check(ps, K)
    raise ArgumentError(f"unknown prime sum {kind!r}")


@dataclass
class EulerDiagnostic:
    s: float
    euler_product: float
    zeta_partial: float
    pole_term: float


def euler_diagnostic(R: float, X: float, table: PrimeTable, terms: int = 10**6) -> EulerDiagnostic:
    """Partial Euler product at ``s = 1 + 1/log R`` against a zeta partial sum.

    The zeta value uses the Euler-Maclaurin tail ``n^(1-s)/(s-1)`` after
    ``terms`` summands; ``1/(s-1)`` is returned for comparison.
    """
    s = 1.0 + 1.0 / math.log(R)
    ps = table.primes_below(X + 1).astype(float)
    logprod = -np.sum(np.log1p(-ps ** (-s)))
    n = np.arange(1, terms + 1, dtype=float)
    zeta = float(np.sum(n ** (-s))) + terms ** (1 - s) / (s - 1) - 0.5 * terms ** (-s)
    return EulerDiagnostic(s, float(math.exp(logprod)), zeta, 1.0 / (s - 1))


def divisor_bound_instance(primes: Sequence[int], w: float, M: float, W: int) -> tuple[bool, float]:
    """Return (product <= M W^M, sum of 1/p over p >= w)."""
    logprod = math.fsum(math.log(p) for p in primes)
    ok = logprod <= math.log(M) + M * math.log(W)
    return ok, math.fsum(1.0 / p for p in primes if p >= w)


# ---------------------------------------------------------------------------
# estimator wrapper


class SieveMajorant(BaseEstimator, TransformerMixin):
    """Builds the majorant and prime weight for one parameter set.

    ``fit`` derives the W-trick parameters and tables; ``transform`` maps an
    array of integers ``x in [1, N]`` to the columns ``(nu(x), f(x))``.
    """

    def __init__(self, N_prime: int = 600_000, w: float = 5, R: float | None = None,
                 R_exponent: float = 0.25, chi_shape: str = "bump", plateau: float = 0.0):
        self.N_prime = N_prime
        self.w = w
        self.R = R
        self.R_exponent = R_exponent
        self.chi_shape = chi_shape
        self.plateau = plateau

    def fit(self, X=None, y=None):
        W, _ = totient_of_primorial(self.w)
        N = self.N_prime // (2 * W)
        R = self.R if self.R is not None else N ** self.R_exponent
        self.table_ = build_prime_table(W * N + W)
        self.params_ = derive_params(self.N_prime, self.w, R=R, A=X, table=self.table_)
        self.chi_ = make_cutoff(self.chi_shape, plateau=self.plateau)
        self.nu_ = nu(self.params_, self.chi_, self.table_)
        self.f_ = prime_weight_f(self.params_, self.table_, A=X, chi=self.chi_)
        self.mean_ = self.nu_.mean()
        return self

    def transform(self, X):
        x = np.asarray(X, dtype=np.int64).ravel()
        if np.any((x < 1) | (x > self.params_.N)):
            raise ArgumentError("x values must lie in [1, N]")
        return np.column_stack([self.nu_.on_interval()[x], self.f_.on_interval()[x]])
