"""Counting polynomial progressions ``x + P_1(m), ..., x + P_k(m)`` in sets of primes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ArgumentError, ResourceError
from .localfactors import complementary_factor
from .polyalg import MultiPoly, parse_family
from .sieve import CyclicFn, PrimeTable, SieveParams, prime_set

HEURISTIC = "HEURISTIC (Bateman-Horn type prediction, unproven)"


@dataclass(frozen=True)
class ProgressionSpec:
    """Pattern polynomials in one variable ``m`` with ``P_i(0) = 0``, plus the ranges."""

    polys: tuple[MultiPoly, ...]
    N: int
    M: int
    A: object = None  # None for all primes, else explicit values or a predicate

    def __post_init__(self):
        polys = tuple(self.polys)
        object.__setattr__(self, "polys", polys)
        if not polys:
            raise ArgumentError("need at least one polynomial")
        if any(P.nvars != 1 for P in polys):
            raise ArgumentError("pattern polynomials must be univariate in m")
        if any(P.constant_term() != 0 for P in polys):
            raise ArgumentError("every P_i must vanish at 0")
        if len(set(polys)) != len(polys):
            raise ArgumentError("pattern polynomials must be distinct")
        if self.N < 1 or self.M < 1:
            raise ArgumentError("N and M must be positive")

    @classmethod
    def parse(cls, text: str, N: int, M: int, A=None) -> "ProgressionSpec":
        return cls(tuple(parse_family(text)), N, M, A)

    @property
    def k(self) -> int:
        return len(self.polys)

    def shift_table(self, ms: np.ndarray | None = None) -> np.ndarray:
        """Array ``[m-1, i] = P_i(m)`` for ``m = 1..M`` (exact Python ints)."""
        if ms is None:
            ms = range(1, self.M + 1)
        return np.array([[P.evaluate((int(m),)) for P in self.polys] for m in ms], dtype=object)


@dataclass
class ProgressionCount:
    count: int
    witnesses: list[tuple[int, ...]] = field(default_factory=list)


def count_progressions(spec: ProgressionSpec, table: PrimeTable, witnesses: int = 0) -> ProgressionCount:
    """Exact number of pairs ``(x, m) in [1, N] x [1, M]`` with every ``x + P_i(m)`` in ``A``.

    Up to ``witnesses`` pairs are returned as rows ``(x, m, x + P_1(m), ...)``
    in increasing ``(m, x)`` order.
    """
    shifts = spec.shift_table()
    lo = min(0, int(shifts.min())) + 1
    hi = spec.N + max(0, int(shifts.max()))
    if hi > table.limit:
        raise ResourceError(f"largest value {hi} exceeds prime table limit {table.limit}")
    member = prime_set(table, spec.A)
    values = np.arange(lo, hi + 1, dtype=np.int64)
    inA = np.zeros(len(values), dtype=bool)
    pos = values >= 2
    inA[pos] = member(values[pos])
    total = 0
    rows: list[tuple[int, ...]] = []
    for j, row in enumerate(shifts):
        ok = np.ones(spec.N, dtype=bool)
        for s in row:
            start = 1 + int(s) - lo
            ok &= inA[start:start + spec.N]
        c = int(np.count_nonzero(ok))
        total += c
        if c and len(rows) < witnesses:
            m = j + 1
            for x in np.flatnonzero(ok)[: witnesses - len(rows)] + 1:
                rows.append((int(x), m) + tuple(int(x) + int(s) for s in row))
    return ProgressionCount(total, rows)


def weighted_polynomial_average(g: CyclicFn, spec: ProgressionSpec, params: SieveParams) -> float:
    """``E_{m <= M} E_{x in X'} prod_i g(x + P_i(W m)/W)`` on the truncated window.

    ``X' = [s, N - s]`` with ``s`` the largest ``|P_i(Wm)/W|``, so no shift
    leaves ``[0, N]`` and nothing wraps around the cyclic group.  ``spec.N``
    is ignored; the length comes from ``g``.
    """
    W, N = params.W, g.N
    if N != params.N:
        raise ArgumentError("g does not live on Z_N for these parameters")
    rows = []
    for m in range(1, spec.M + 1):
        row = []
        for P in spec.polys:
            v = P.evaluate((W * m,))
            if v % W:
                raise ArgumentError(f"P(Wm)/W is not integral for {P} at m = {m}")
            row.append(v // W)
        rows.append(row)
    s = max(abs(v) for row in rows for v in row)
    if N - 2 * s < 1:
        raise ArgumentError(f"window [{s}, {N - s}] is empty: shifts would wrap around Z_{N}")
    xs = np.arange(s, N - s + 1, dtype=np.int64)
    vals = g.values
    acc = 0.0
    for row in rows:
        prod = np.ones(len(xs))
        for v in row:
            prod *= vals[(xs + v) % N]
        acc += math.fsum(prod.tolist()) / len(xs)
    return acc / spec.M


def pattern_polys(spec: ProgressionSpec) -> list[MultiPoly]:
    """The two-variable forms ``x + P_i(m)`` in variables ``(x, m)``."""
    x = MultiPoly.var(2, 0)
    return [x + P.embed(2, [1]) for P in spec.polys]


def complementary_factor_fast(p: int, spec: ProgressionSpec) -> Fraction:
    """Closed form for the forms ``x + P_i(m)``: ``E_m (1 - #{P_i(m) mod p} / p)``."""
    free = 0
    for m in range(p):
        free += p - len({P.evaluate((m,)) % p for P in spec.polys})
    return Fraction(free, p * p)


@dataclass
class SingularSeries:
    gamma: float
    factors: dict[int, Fraction]
    terrible_prime: int | None
    label: str = HEURISTIC

    def predicted_count(self, N: int, M: int, k: int) -> float:
        return self.gamma * N * M / math.log(N) ** k


def singular_series_forms(forms: Sequence[MultiPoly], P0: float, fast=None) -> SingularSeries:
    """``prod_{p <= P0} cbar_p / (1 - 1/p)^k`` for arbitrary integer forms.

    ``fast(p)``, when given, replaces enumeration of ``F_p^D`` by a closed
    form.  A prime with ``cbar_p = 0`` makes the product vanish and is
    returned as the witness.
    """
    k = len(forms)
    if k == 0:
        raise ArgumentError("need at least one form")
    D = forms[0].nvars
    factors: dict[int, Fraction] = {}
    log_gamma = 0.0
    for p in range(2, int(P0) + 1):
        if any(p % q == 0 for q in range(2, math.isqrt(p) + 1)):
            continue
        c = fast(p) if fast is not None else complementary_factor(p, list(forms), D)
        factors[p] = c
        if c == 0:
            return SingularSeries(0.0, factors, p)
        log_gamma += math.log(c) - k * math.log1p(-1.0 / p)
    return SingularSeries(math.exp(log_gamma), factors, None)


def singular_series(spec: ProgressionSpec, P0: float, enumerate_up_to: int = 200) -> SingularSeries:
    """Singular series of the forms ``x + P_i(m)``.

    Primes up to ``enumerate_up_to`` go through the generic enumerator on
    ``F_p^2``; larger ones use the one-variable closed form, which counts the
    same set.  Since every ``P_i`` vanishes at 0 the slice ``m = 0`` always
    leaves ``p - 1`` free values of ``x``, so the product never vanishes here;
    :func:`singular_series_forms` accepts families where it can.
    """
    forms = pattern_polys(spec)

    def cbar(p):
        if p <= enumerate_up_to:
            return complementary_factor(p, forms, 2)
        return complementary_factor_fast(p, spec)

    return singular_series_forms(forms, P0, fast=cbar)


@dataclass
class PredictionReport:
    observed: int
    predicted: float
    ratio: float
    gamma: float
    label: str = HEURISTIC


def prediction_check(spec: ProgressionSpec, table: PrimeTable, P0: float) -> PredictionReport:
    """Observed count against ``gamma N M / log^k N``."""
    obs = count_progressions(spec, table).count
    ss = singular_series(spec, P0)
    pred = ss.predicted_count(spec.N, spec.M, spec.k)
    return PredictionReport(obs, pred, obs / pred if pred else math.inf, ss.gamma)
