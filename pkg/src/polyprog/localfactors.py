"""Principal and complementary local factors over ``F_p`` by exact enumeration."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import ArgumentError, ResourceError
from .polyalg import (
    MultiPoly,
    PrimeClass,
    classify_prime,
    jointly_coprime_mod_p,
    linear_split,
    reduce_mod_p,
)

DEFAULT_BUDGET = 10**8
_CHUNK = 1 << 20


def _nvars(polys: Sequence[MultiPoly], nvars: int | None) -> int:
    if polys:
        D = polys[0].nvars
        if any(P.nvars != D for P in polys):
            raise ArgumentError("all polynomials must share nvars")
        if nvars is not None and nvars != D:
            raise ArgumentError("nvars disagrees with the polynomials")
        return D
    return 0 if nvars is None else nvars


def _check_budget(p: int, D: int, budget: int):
    if p ** D > budget:
        raise ResourceError(f"enumeration of F_{p}^{D} needs p^D = {p ** D} points, budget is {budget}")


def zero_counts(p: int, polys: Sequence[MultiPoly], nvars: int | None = None,
                budget: int = DEFAULT_BUDGET) -> tuple[int, int, int]:
    """Return ``(common zeros, points where no P_j vanishes, p^D)`` over ``F_p^D``.

    The first coordinate is peeled off in slabs so memory stays bounded; each
    slab is evaluated polynomial by polynomial with early exit once nothing
    is left to decide.
    """
    if p < 2:
        raise ArgumentError(f"modulus must be >= 2, got {p}")
    D = _nvars(polys, nvars)
    _check_budget(p, D, budget)
    total = p ** D
    if not polys:
        return total, total, total
    reduced = [reduce_mod_p(P, p).body for P in polys]
    if D == 0:
        vals = [P.constant_term() % p for P in reduced]
        allz = int(all(v == 0 for v in vals))
        nonz = int(all(v != 0 for v in vals))
        return allz, nonz, 1
    rest = p ** (D - 1)
    slab = max(1, min(p, _CHUNK // max(rest, 1)))
    full = np.arange(p, dtype=np.int64)
    zeros = nonzeros = 0
    for start in range(0, p, slab):
        axes = [full[start:start + slab]] + [full] * (D - 1)
        all_zero = None
        none_zero = None
        for P in reduced:
            v = P.evaluate_mod_grid(p, axes) == 0
            all_zero = v if all_zero is None else (all_zero & v)
            nz = ~v
            none_zero = nz if none_zero is None else (none_zero & nz)
            if not all_zero.any() and not none_zero.any():
                break
        zeros += int(all_zero.sum())
        nonzeros += int(none_zero.sum())
    return zeros, nonzeros, total


def local_factor(p: int, polys: Sequence[MultiPoly], nvars: int | None = None,
                 budget: int = DEFAULT_BUDGET) -> Fraction:
    """Density of common zeros of ``polys`` in ``F_p^D`` as an exact fraction."""
    z, _, total = zero_counts(p, polys, nvars, budget)
    return Fraction(z, total)


def complementary_factor(p: int, polys: Sequence[MultiPoly], nvars: int | None = None,
                         budget: int = DEFAULT_BUDGET) -> Fraction:
    """Density of points where no ``P_j`` vanishes mod ``p``."""
    _, nz, total = zero_counts(p, polys, nvars, budget)
    return Fraction(nz, total)


def inclusion_exclusion(p: int, polys: Sequence[MultiPoly], nvars: int | None = None,
                        budget: int = DEFAULT_BUDGET) -> Fraction:
    """Alternating sum of principal factors over all subfamilies."""
    D = _nvars(polys, nvars)
    total = Fraction(0)
    for size in range(len(polys) + 1):
        for S in combinations(polys, size):
            total += (-1) ** size * local_factor(p, list(S), D, budget)
    return total


@dataclass(frozen=True)
class LinearPartition:
    """Counts of the coefficient-space split for ``P = P1*x_var + P0``."""

    A: int  # P1 != 0: exactly one root in x_var
    B: int  # P1 == 0, P0 != 0: no root
    C: int  # P1 == P0 == 0: every x_var is a root
    p: int
    D: int

    @property
    def value(self) -> Fraction:
        return Fraction(self.A + self.C * self.p, self.p ** self.D)


def linear_partition(p: int, P: MultiPoly, var: int, budget: int = DEFAULT_BUDGET) -> LinearPartition:
    split = linear_split(P, var, p)
    if split is None:
        raise ArgumentError(f"{P} is not linear in x{var + 1} modulo {p}")
    P1, P0 = split
    D = P.nvars
    # drop the eliminated variable; both coefficients are free of it
    keep = [i for i in range(D) if i != var]
    def restrict(Q):
        return MultiPoly(D - 1, {tuple(e[i] for i in keep): c for e, c in Q.items()})
    q1, q0 = restrict(P1), restrict(P0)
    _check_budget(p, D - 1, budget)
    if D == 1:
        a1 = q1.constant_term() % p
        a0 = q0.constant_term() % p
        A = int(a1 != 0)
        B = int(a1 == 0 and a0 != 0)
        return LinearPartition(A, B, 1 - A - B, p, D)
    z1, nz1, tot = zero_counts(p, [q1], D - 1, budget)
    both, _, _ = zero_counts(p, [q1, q0], D - 1, budget)
    A = nz1
    C = both
    B = z1 - both
    return LinearPartition(A, B, C, p, D)


def local_factor_linear(p: int, P: MultiPoly, var: int, budget: int = DEFAULT_BUDGET) -> Fraction:
    """``(|A| + |C| p) / p^D`` from the linear split in ``var``."""
    return linear_partition(p, P, var, budget).value


@dataclass
class Clause:
    name: str
    applicable: bool
    holds: bool
    value: Fraction | None
    constant: float | None
    detail: str = ""


@dataclass
class LocalEstimatesReport:
    p: int
    prime_class: PrimeClass
    c_p: Fraction
    c_bar_p: Fraction
    sample_space_size: int
    clauses: dict[str, Clause] = field(default_factory=dict)


def local_estimates_report(p: int, polys: Sequence[MultiPoly], nvars: int | None = None,
                           budget: int = DEFAULT_BUDGET) -> LocalEstimatesReport:
    """Evaluate clauses (a)-(f) of the local estimates on one instance.

    Each clause reports the smallest constant ``C`` that makes it true here,
    taking the worst subfamily ``S`` where the clause ranges over subfamilies.
    """
    D = _nvars(polys, nvars)
    J = len(polys)
    cls = classify_prime(p, polys) if polys else PrimeClass("Good", "empty family")
    terrible = cls.is_terrible
    good = cls.is_good
    subsets = {S: local_factor(p, [polys[j] for j in S], D, budget)
               for size in range(J + 1) for S in combinations(range(J), size)}
    cbar = complementary_factor(p, polys, D, budget)
    rep = LocalEstimatesReport(p, cls, subsets[tuple(range(J))], cbar, p ** D)

    rep.clauses["a"] = Clause("a", True, subsets[()] == 1, subsets[()], 0.0, "empty subfamily")

    def worst(filter_fn, score):
        best_S, best = None, 0.0
        for S, v in subsets.items():
            if filter_fn(S):
                s = score(v)
                if best_S is None or s > best:
                    best_S, best = S, s
        return best_S, best

    if not terrible and J >= 1:
        S, C = worst(lambda S: len(S) >= 1, lambda v: float(v * p))
        rep.clauses["b"] = Clause("b", True, True, subsets[S], C, f"worst S = {S}")
    else:
        rep.clauses["b"] = Clause("b", False, True, None, None, "terrible prime or empty family")
    if good and J >= 1:
        S, C = worst(lambda S: len(S) == 1, lambda v: float(abs(v - Fraction(1, p)) * p * p))
        rep.clauses["c"] = Clause("c", True, True, subsets[S], C, f"worst S = {S}")
    else:
        rep.clauses["c"] = Clause("c", False, True, None, None, "prime not good")
    if good and J >= 2:
        S, C = worst(lambda S: len(S) > 1, lambda v: float(v * p * p))
        rep.clauses["d"] = Clause("d", True, True, subsets[S], C, f"worst S = {S}")
    else:
        rep.clauses["d"] = Clause("d", False, True, None, None, "prime not good or J < 2")
    if terrible:
        rep.clauses["e"] = Clause("e", True, cbar == 0, cbar, 0.0, cls.witness)
    else:
        rep.clauses["e"] = Clause("e", False, True, None, None, "prime not terrible")
    if not terrible:
        rep.clauses["f"] = Clause("f", True, True, cbar, float(abs(cbar - 1) * p), "")
    else:
        rep.clauses["f"] = Clause("f", False, True, None, None, "terrible prime")
    return rep


def crude_bound_checks(p: int, polys: Sequence[MultiPoly], nvars: int | None = None) -> dict[str, object]:
    """Check the crude local bounds; ``None`` marks a clause whose hypothesis fails.

    Clause (iv) is checked with the explicit constant ``D d / p``.  Clause (v)
    has no explicit constant, so ``c_p * p^2`` is returned for inspection.
    """
    D = _nvars(polys, nvars)
    reduced = [reduce_mod_p(P, p).body for P in polys]
    cp = local_factor(p, polys, D)
    cbar = complementary_factor(p, polys, D)
    out: dict[str, bool | None] = {}
    out["i"] = (cp == 1) if polys and all(R.is_zero() for R in reduced) else None
    out["ii"] = (cbar == 0) if any(R.is_zero() for R in reduced) else None
    out["iii"] = (cp == 0) if any((not R.is_zero()) and R.is_constant() for R in reduced) else None
    nonconst = [R for R in reduced if not R.is_constant()]
    if nonconst:
        d = max(R.total_degree() for R in reduced if not R.is_zero())
        out["iv"] = cp <= Fraction(D * d, p)
    else:
        out["iv"] = None
    if polys and all(not R.is_zero() for R in reduced) and jointly_coprime_mod_p(polys, p):
        out["v_scaled"] = float(cp * p * p)
    else:
        out["v_scaled"] = None
    return out
