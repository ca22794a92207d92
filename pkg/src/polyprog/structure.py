"""Finite factors, conditional expectation and the energy-increment decomposition."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import ArgumentError, InvariantError, ResourceError
from .gowers import BadSet, GowersSpec, bad_set, dual_function
from .sieve import CyclicFn

ENERGY_CONSTANT = 1.0 / 64.0


@dataclass(frozen=True)
class Factor:
    """A partition of ``Z_N`` given by an atom label per point (labels compacted to ``0..k-1``)."""

    N: int
    atom_id: np.ndarray
    atom_count: int

    @classmethod
    def from_labels(cls, labels) -> "Factor":
        labels = np.asarray(labels)
        if labels.ndim != 1 or labels.size == 0:
            raise ArgumentError("labels must be a non-empty vector")
        _, inv = np.unique(labels, return_inverse=True)
        inv = inv.astype(np.int64)
        return cls(len(labels), inv, int(inv.max()) + 1)

    @classmethod
    def trivial(cls, N: int) -> "Factor":
        return cls(N, np.zeros(N, dtype=np.int64), 1)

    @classmethod
    def discrete(cls, N: int) -> "Factor":
        return cls(N, np.arange(N, dtype=np.int64), N)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.atom_id, minlength=self.atom_count)

    def same_partition(self, other: "Factor") -> bool:
        """Equality up to relabelling."""
        if self.N != other.N or self.atom_count != other.atom_count:
            return False
        return join(self, other).atom_count == self.atom_count

    def is_measurable(self, values: np.ndarray, tol: float = 0.0) -> bool:
        """True when ``values`` is constant on every atom."""
        values = np.asarray(values, dtype=float)
        lo = np.full(self.atom_count, np.inf)
        hi = np.full(self.atom_count, -np.inf)
        np.minimum.at(lo, self.atom_id, values)
        np.maximum.at(hi, self.atom_id, values)
        return bool(np.all(hi - lo <= tol))


def factor_from_function(G: CyclicFn, eps: float, seed: int | None = None,
                         alpha: float | None = None) -> Factor:
    """Atoms ``G^{-1}[(n + alpha) eps, (n + alpha + 1) eps)`` with a random offset ``alpha``.

    ``alpha`` is drawn uniformly from ``[0, 1)`` by ``seed`` unless given.
    """
    if not eps > 0:
        raise ArgumentError("bin width eps must be positive")
    if alpha is None:
        alpha = float(np.random.default_rng(seed).random())
    bins = np.floor(G.values / eps - alpha).astype(np.int64)
    return Factor.from_labels(bins)


def join(Y: Factor, Z: Factor) -> Factor:
    """Common refinement: atoms are the non-empty intersections."""
    if Y.N != Z.N:
        raise ArgumentError("factors live on different N")
    return Factor.from_labels(Y.atom_id * Z.atom_count + Z.atom_id)


def _atom_sums(values: np.ndarray, Y: Factor) -> np.ndarray:
    return np.bincount(Y.atom_id, weights=values, minlength=Y.atom_count)


def cond_exp(f: CyclicFn, Y: Factor) -> CyclicFn:
    """``E(f|Y)(x)``: the average of ``f`` over the atom containing ``x``."""
    if f.N != Y.N:
        raise ArgumentError("function and factor live on different N")
    means = _atom_sums(f.values, Y) / Y.sizes()
    return CyclicFn(f.N, means[Y.atom_id])


@dataclass
class BadAtoms:
    mask: np.ndarray
    small_atoms: list[int]
    threshold: float
    mass: float  # int 1_mask (nu + 1)
    max_good_deviation: float  # max over other atoms of |E(nu - 1 | Y)|


def refine_bad_set(Y: Factor, nu_fn: CyclicFn, threshold: float) -> BadAtoms:
    """Union of atoms whose ``(nu + 1)``-mass is at most ``threshold``."""
    if nu_fn.N != Y.N:
        raise ArgumentError("nu and factor live on different N")
    N = Y.N
    mass = _atom_sums(nu_fn.values + 1.0, Y) / N
    small = mass <= threshold
    mask = small[Y.atom_id]
    dev = np.abs(_atom_sums(nu_fn.values - 1.0, Y) / Y.sizes())
    good_dev = float(dev[~small].max()) if (~small).any() else 0.0
    return BadAtoms(mask, [int(i) for i in np.flatnonzero(small)], threshold,
                    float(mass[small].sum()), good_dev)


def energy(g: CyclicFn, Y: Factor, omega: np.ndarray) -> float:
    """``int (1 - 1_omega) E(g|Y)^2``."""
    e = cond_exp(g, Y).values
    return float(np.mean(np.where(omega, 0.0, e * e)))


@dataclass
class IterationRecord:
    K: int
    sigma: float
    sigma_mass: float
    energy: float
    correlation: float
    atoms: int
    alpha: float | None


@dataclass
class Decomposition:
    g_structured: CyclicFn
    g_uniform: CyclicFn
    omega: np.ndarray
    sigma: float
    sigma_mass: float
    factor: Factor
    global_bad: BadSet
    trace: list[IterationRecord] = field(default_factory=list)
    final_correlation: float = 0.0

    @property
    def iterations(self) -> int:
        return len(self.trace) - 1

    def bounds(self, g: CyclicFn) -> dict[str, float]:
        """Worst violations of the output bounds (non-positive means satisfied)."""
        gs, gu = self.g_structured.values, self.g_uniform.values
        tot = gs + gu
        return {
            "structured_lower": float(-gs.min()),
            "structured_upper": float(gs.max() - (1.0 + self.sigma)),
            "sum_lower": float(-tot.min()),
            "sum_upper": float((tot - g.values).max()),
            "mass_deficit": float(g.mean() - self.g_structured.mean()),
            "correlation": self.final_correlation,
            "mismatch_mass": float(np.mean(~np.isclose(tot, g.values, rtol=0, atol=1e-12))),
        }


def _modified(f: CyclicFn, spec: GowersSpec, omega0: BadSet) -> CyclicFn:
    Df = dual_function(f, spec)
    return CyclicFn(f.N, np.where(omega0.mask, 0.0, Df.values))


def knvn_decompose(g: CyclicFn, nu_fn: CyclicFn, spec: GowersSpec, eta4: float, eta5: float,
                   seed: int = 0, c: float = ENERGY_CONSTANT, max_iter: int | None = None) -> Decomposition:
    """Energy-increment decomposition ``g ~ g_structured + g_uniform``.

    Each round forms ``F = (1 - 1_omega)(g - E(g|Y)) / (1 + sigma)``; if its
    modified-dual correlation exceeds ``eta4`` the factor is refined by the
    level sets of the modified dual of ``F`` (bin width ``eta4^2``) and small
    atoms join the exceptional set.  ``sigma`` is the larger of the measured
    exceptional mass and the largest ``|E(nu - 1|Y)|`` on the remaining atoms.
    """
    if g.N != nu_fn.N:
        raise ArgumentError("g and nu must share N")
    if np.any(g.values < 0) or np.any(g.values > nu_fn.values):
        raise ArgumentError("need 0 <= g <= nu pointwise")
    if not (eta4 > 0 and eta5 > 0):
        raise ArgumentError("eta4 and eta5 must be positive")
    cap = int(4.0 / (c * eta4 * eta4)) + 1
    if max_iter is not None:
        cap = min(cap, max_iter)
    rng = np.random.default_rng(seed)
    omega0 = bad_set(nu_fn, spec)
    N = g.N
    Y = Factor.trivial(N)
    omega = np.zeros(N, dtype=bool)
    sigma = sigma_mass = 0.0
    E_prev = energy(g, Y, omega)
    trace: list[IterationRecord] = []
    alpha = None
    while True:
        Eg = cond_exp(g, Y).values
        F = CyclicFn(N, np.where(omega, 0.0, g.values - Eg) / (1.0 + sigma))
        DF = _modified(F, spec, omega0)
        corr = abs(float(np.mean(F.values * DF.values)))
        trace.append(IterationRecord(len(trace), sigma, sigma_mass, E_prev, corr, Y.atom_count, alpha))
        if corr <= eta4:
            gs = CyclicFn(N, np.where(omega, 0.0, Eg) / (1.0 + sigma))
            return Decomposition(gs, F, omega, sigma, sigma_mass, Y, omega0, trace, corr)
        if len(trace) > cap:
            raise ResourceError(f"iteration cap {cap} reached")
        alpha = float(rng.random())
        Y = join(Y, factor_from_function(DF, eta4 * eta4, alpha=alpha))
        bad = refine_bad_set(Y, nu_fn, math.sqrt(eta5))
        omega = omega | bad.mask
        sigma_mass = float(np.mean(np.where(omega, nu_fn.values + 1.0, 0.0)))
        good = ~omega
        if good.any():
            dev = np.abs(cond_exp(CyclicFn(N, nu_fn.values - 1.0), Y).values[good]).max()
        else:
            dev = 0.0
        sigma = max(sigma_mass, float(dev))
        E_new = energy(g, Y, omega)
        if E_new < E_prev + c * eta4 * eta4:
            trace.append(IterationRecord(len(trace), sigma, sigma_mass, E_new, float("nan"), Y.atom_count, alpha))
            raise InvariantError(
                f"energy increment failed at K = {len(trace) - 1}: {E_prev:.6g} -> {E_new:.6g} "
                f"(needed +{c * eta4 * eta4:.3g})", trace=trace)
        E_prev = E_new


@dataclass
class OrthogonalityReport:
    K: int
    value: float
    bound: float


def orthogonality_report(fs: list[CyclicFn], nu_fn: CyclicFn, spec: GowersSpec,
                         omega0: BadSet | None = None) -> OrthogonalityReport:
    """``|int prod_k D~f_k (nu - 1)|`` next to the trivial bound ``2^(K 2^d) int |nu - 1|``."""
    if omega0 is None:
        omega0 = bad_set(nu_fn, spec)
    prod = np.ones(nu_fn.N)
    for f in fs:
        prod *= _modified(f, spec, omega0).values
    val = abs(float(np.mean(prod * (nu_fn.values - 1.0))))
    bound = float(2 ** (len(fs) * 2 ** spec.d)) * float(np.mean(np.abs(nu_fn.values - 1.0)))
    return OrthogonalityReport(len(fs), val, bound)


class KNVNDecomposition(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`knvn_decompose`.

    ``X`` has two columns, ``g`` and ``nu``, one row per residue.  ``fit``
    builds the Gowers data from the polynomial family and decomposes ``X``;
    ``transform`` decomposes any compatible ``X`` and returns the columns
    ``[g_structured, g_uniform]``.
    """

    def __init__(self, family: str = "0; m; m^2", H: int = 2, sqrtM: int = 4, W_value: int = 1,
                 eta4: float = 0.05, eta5: float = 1e-3, seed: int = 0):
        self.family = family
        self.H = H
        self.sqrtM = sqrtM
        self.W_value = W_value
        self.eta4 = eta4
        self.eta5 = eta5
        self.seed = seed

    def _split(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != 2:
            raise ArgumentError("X must have shape (N, 2) with columns g and nu")
        return CyclicFn(len(X), X[:, 0]), CyclicFn(len(X), X[:, 1])

    def fit(self, X, y=None):
        from .pet import linearize, make_system
        from .polyalg import parse_family

        res = linearize(make_system(parse_family(self.family)))
        self.spec_ = res.spec_with(self.H, self.W_value, self.sqrtM)
        g, nu_fn = self._split(X)
        self.result_ = knvn_decompose(g, nu_fn, self.spec_, self.eta4, self.eta5, self.seed)
        self.n_iter_ = self.result_.iterations
        return self

    def transform(self, X):
        if not hasattr(self, "spec_"):
            raise ArgumentError("call fit before transform")
        g, nu_fn = self._split(X)
        out = knvn_decompose(g, nu_fn, self.spec_, self.eta4, self.eta5, self.seed)
        return np.column_stack([out.g_structured.values, out.g_uniform.values])
