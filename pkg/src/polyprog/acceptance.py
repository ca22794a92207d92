"""The acceptance suite run by ``polyprog verify`` and the acceptance tests.

Each check returns a :class:`CriterionResult`.  Report rows hold only
deterministic quantities; wall-clock runtimes go to the metadata file, but
they still count toward the verdict.
"""

from __future__ import annotations

import functools
import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Callable

import numpy as np

from .errors import PolyprogError, ResourceError
from .polyalg import MultiPoly, is_prime, parse_family, parse_poly
from .report import ReportRow, RunConfig

CMD = "verify"


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    rows: list[ReportRow] = field(default_factory=list)
    runtime: float = 0.0
    runtime_limit: float | None = None
    detail: str = ""

    @property
    def runtime_ok(self) -> bool:
        return self.runtime_limit is None or self.runtime < self.runtime_limit

    @property
    def ok(self) -> bool:
        return self.passed and self.runtime_ok

    def line(self) -> str:
        verdict = "PASS" if self.ok else "FAIL"
        rt = f"{self.runtime:.2f}s" + (f" (limit {self.runtime_limit:g}s)" if self.runtime_limit else "")
        extra = f" -- {self.detail}" if self.detail else ""
        return f"[{verdict}] criterion {self.number}: {self.title}; runtime {rt}{extra}"


def _row(q, value, prediction=None, tol=None, note=""):
    return ReportRow(CMD, q, value, prediction, tol, note)


def _rng(cfg: RunConfig, n: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, n])


def _timed(number: int, title: str, limit: float | None):
    def deco(fn: Callable[[RunConfig], tuple[bool, list[ReportRow], str]]):
        @functools.wraps(fn)
        def run(cfg: RunConfig) -> CriterionResult:
            t0 = time.perf_counter()
            try:
                passed, rows, detail = fn(cfg)
            except PolyprogError as exc:
                passed, rows, detail = False, [_row(f"c{number}.error", type(exc).__name__, note=str(exc))], str(exc)
            rt = time.perf_counter() - t0
            rows.append(_row(f"c{number}.verdict", passed, note="PASS" if passed else "FAIL"))
            return CriterionResult(number, title, passed, rows, rt, limit, detail)
        run.number = number
        return run
    return deco


# ---------------------------------------------------------------------------
# 1. local factor table


@_timed(1, "local factor table of x^2+1", 1.0)
def criterion_1(cfg):
    from .localfactors import local_factor

    expected = {2: Fraction(1, 2), 3: Fraction(0), 5: Fraction(2, 5), 13: Fraction(2, 13),
                17: Fraction(2, 17), 19: Fraction(0)}
    P = parse_poly("x^2+1")
    rows, ok = [], True
    for p in cfg.get_list("c1.primes"):
        v = local_factor(p, [P])
        want = expected.get(p)
        good = want is None or v == want
        ok &= good
        rows.append(_row(f"c1.c_{p}", v, want, 0, "exact"))
    return ok, rows, ""


# ---------------------------------------------------------------------------
# 2. complementary factors of independent linear forms


def _rank_mod_p(A: np.ndarray, p: int) -> int:
    A = A.copy() % p
    r = 0
    rows, cols = A.shape
    for c in range(cols):
        piv = next((i for i in range(r, rows) if A[i, c] % p), None)
        if piv is None:
            continue
        A[[r, piv]] = A[[piv, r]]
        A[r] = (A[r] * pow(int(A[r, c]), -1, p)) % p
        for i in range(rows):
            if i != r and A[i, c]:
                A[i] = (A[i] - A[i, c] * A[r]) % p
        r += 1
    return r


def linear_form_instances(rng: np.random.Generator, count: int):
    """Seeded ``(p, D, forms)`` with ``J <= min(3, D)`` forms independent mod ``p``."""
    primes = [2, 3, 5, 7, 11, 13]
    out = []
    while len(out) < count:
        p = int(rng.choice(primes))
        D = int(rng.integers(1, 4))
        J = int(rng.integers(1, min(3, D) + 1))
        A = rng.integers(-20, 21, size=(J, D))
        if _rank_mod_p(A, p) < J:
            continue
        c = rng.integers(-20, 21, size=J)
        forms = []
        for i in range(J):
            terms = {tuple(int(k == j) for k in range(D)): int(A[i, j]) for j in range(D) if A[i, j]}
            if c[i]:
                terms[(0,) * D] = int(c[i])
            forms.append(MultiPoly(D, terms))
        out.append((p, D, forms))
    return out


@_timed(2, "complementary factors of independent linear forms", None)
def criterion_2(cfg):
    from .localfactors import complementary_factor, inclusion_exclusion

    bad_formula = bad_ie = 0
    inst = linear_form_instances(_rng(cfg, 2), cfg.get_int("c2.instances"))
    for p, D, forms in inst:
        cbar = complementary_factor(p, forms, D)
        bad_formula += cbar != (1 - Fraction(1, p)) ** len(forms)
        bad_ie += inclusion_exclusion(p, forms, D) != cbar
    rows = [_row("c2.instances", len(inst)), _row("c2.formula_mismatches", bad_formula, 0, 0, "exact"),
            _row("c2.inclusion_exclusion_mismatches", bad_ie, 0, 0, "exact")]
    return bad_formula == 0 and bad_ie == 0, rows, ""


# ---------------------------------------------------------------------------
# 3. zero density bound


def random_poly_mod_p(rng: np.random.Generator, D: int, d: int, p: int) -> MultiPoly:
    """A seeded polynomial of total degree <= d, non-zero mod p."""
    monos = [e for e in itertools.product(range(d + 1), repeat=D) if sum(e) <= d]
    while True:
        k = int(rng.integers(1, len(monos) + 1))
        pick = rng.choice(len(monos), size=k, replace=False)
        terms = {monos[i]: int(rng.integers(1, p)) for i in pick}
        P = MultiPoly(D, terms)
        if not P.is_zero():
            return P


@_timed(3, "zero density at most Dd/p", 30.0)
def criterion_3(cfg):
    from .localfactors import local_factor

    rng = _rng(cfg, 3)
    worst, fails, n = -math.inf, 0, cfg.get_int("c3.instances")
    for _ in range(n):
        p = int(rng.choice([5, 7, 11, 13]))
        D = int(rng.integers(1, 4))
        d = int(rng.integers(1, 4))
        P = random_poly_mod_p(rng, D, d, p)
        deg = P.total_degree()
        dens = local_factor(p, [P], D)
        bound = Fraction(D * deg, p)
        fails += dens > bound
        worst = max(worst, float(dens - bound))
    rows = [_row("c3.instances", n), _row("c3.exceptions", fails, 0, 0),
            _row("c3.max_density_minus_bound", worst, None, 0)]
    return fails == 0, rows, ""


# ---------------------------------------------------------------------------
# 4. resultants


def random_univariate(rng, deg: int, p: int) -> MultiPoly:
    coeffs = [int(c) for c in rng.integers(0, p, size=deg + 1)]
    coeffs[-1] = int(rng.integers(1, p))
    return MultiPoly.from_coeffs(coeffs)


def resultant_pairs(rng, count: int):
    """Seeded ``(p, P, Q)`` with exact degrees <= 4 mod ``p``; about half share a factor."""
    out = []
    for i in range(count):
        p = int(rng.choice([2, 3, 5, 7, 11]))
        if i % 2:
            g = random_univariate(rng, int(rng.integers(1, 3)), p)
            a = random_univariate(rng, int(rng.integers(0, 3)), p)
            b = random_univariate(rng, int(rng.integers(0, 3)), p)
            P, Q = g * a, g * b
        else:
            P = random_univariate(rng, int(rng.integers(1, 5)), p)
            Q = random_univariate(rng, int(rng.integers(1, 5)), p)
        out.append((p, P, Q))
    return out


@_timed(4, "resultants and gcds", None)
def criterion_4(cfg):
    from .polyalg import gcd_mod_p, reduce_mod_p, resultant

    rng = _rng(cfg, 4)
    lin_bad = 0
    n_lin = cfg.get_int("c4.linear")
    for _ in range(n_lin):
        a, b, c, d = (int(v) for v in rng.integers(-10**6, 10**6, size=4))
        P = MultiPoly.from_coeffs([a, b])
        Q = MultiPoly.from_coeffs([c, d])
        lin_bad += resultant(P, Q, 0, 1, 1).constant_term() != a * d - b * c
    mismatch = shared = 0
    pairs = resultant_pairs(rng, cfg.get_int("c4.pairs"))
    for p, P, Q in pairs:
        # degrees are exact mod p, so the resultant mod p is the resultant of the reductions
        Pr, Qr = reduce_mod_p(P, p).body, reduce_mod_p(Q, p).body
        dP, dQ = Pr.total_degree(), Qr.total_degree()
        if dP == 0 or dQ == 0:
            res_zero = False
        else:
            res_zero = resultant(Pr, Qr, 0, dP, dQ).constant_term() % p == 0
        g = gcd_mod_p(Pr, Qr, p)
        nontrivial = not g.is_zero() and g.total_degree() > 0
        shared += nontrivial
        mismatch += res_zero != nontrivial
    rows = [_row("c4.linear_mismatches", lin_bad, 0, 0, "exact, value ad-bc"),
            _row("c4.pairs", len(pairs)), _row("c4.pairs_with_common_factor", shared),
            _row("c4.equivalence_mismatches", mismatch, 0, 0, "exact")]
    return lin_bad == 0 and mismatch == 0, rows, ""


# ---------------------------------------------------------------------------
# 5. lattice equidistribution


def box_corpus(rng, count: int):
    """Seeded ``(box, m, a, r)`` with inradius ``r in [50, 500]`` and ``m <= r/10``."""
    from .convexlat import Box

    out = []
    for _ in range(count):
        D = int(rng.integers(1, 4))
        r = float(rng.uniform(50, 500))
        sides = [2 * r] + [float(rng.uniform(2 * r, 4 * r)) for _ in range(D - 1)]
        rng.shuffle(sides)
        lower = [float(rng.uniform(-1000, 1000)) for _ in range(D)]
        box = Box(tuple(lower), tuple(lo + s for lo, s in zip(lower, sides)))
        m = int(rng.integers(1, int(r // 10) + 1))
        a = tuple(int(v) for v in rng.integers(0, m, size=D))
        out.append((box, m, a, r))
    return out


@_timed(5, "lattice equidistribution in residue classes", None)
def criterion_5(cfg):
    from .convexlat import inradius, lattice_equidistribution

    worst = 0.0
    empirical: dict[int, float] = {}
    fails = 0
    corpus = box_corpus(_rng(cfg, 5), cfg.get_int("c5.boxes"))
    for box, m, a, r in corpus:
        r = inradius(box)
        dev = abs(lattice_equidistribution(box, m, a))
        fails += dev > 5 * m / r
        worst = max(worst, dev * r / m)
        empirical[box.dim] = max(empirical.get(box.dim, 0.0), dev * r / m)
    rows = [_row("c5.boxes", len(corpus)), _row("c5.exceptions", fails, 0, 0),
            _row("c5.max_dev_times_r_over_m", worst, None, 5.0, "empirical C_D over the corpus")]
    rows += [_row(f"c5.empirical_C_{D}", v, None, 5.0) for D, v in sorted(empirical.items())]
    return fails == 0, rows, ""


# ---------------------------------------------------------------------------
# 6. majorant sanity


def sieve_setup(N: int, w: float, R_exponent: float, chi_shape: str = "bump"):
    """Majorant data on ``Z_N``: ``N' = 2 W N`` and ``R = N^R_exponent``."""
    from .sieve import build_prime_table, derive_params, make_cutoff, nu, prime_weight_f, totient_of_primorial

    W, _ = totient_of_primorial(w)
    table = build_prime_table(W * N + W)
    params = derive_params(2 * W * N, w, R=N ** R_exponent, table=table)
    chi = make_cutoff(chi_shape)
    nu_fn = nu(params, chi, table)
    f = prime_weight_f(params, table, chi=chi)
    return params, table, chi, nu_fn, f


@_timed(6, "majorant sanity", 60.0)
def criterion_6(cfg):
    from .sieve import check_majorant

    tol = cfg.get_float("c6.mean_tol")
    params, _, chi, nu_fn, f = sieve_setup(cfg.get_int("c6.N"), cfg.get_float("c6.w"),
                                           cfg.get_float("c6.R_exponent"), cfg.get("c6.chi"))
    maj = check_majorant(f, nu_fn)
    mean = nu_fn.mean()
    norm = chi.norm_integral()
    phi = chi.phi_identity()
    c_maj = maj.holds
    c_mean = abs(mean - 1) <= tol
    c_norm = abs(norm - 1) <= 1e-6
    c_phi = abs(phi - 1) <= 1e-3
    rows = [_row("c6.W", params.W), _row("c6.b", params.b), _row("c6.R", params.R),
            _row("c6.f_le_nu_violations", maj.violations, 0, 0, "exact pointwise"),
            _row("c6.mean_nu", mean, 1.0, tol),
            _row("c6.chi_prime_norm", norm, 1.0, 1e-6),
            _row("c6.phi_identity_real", phi.real, 1.0, 1e-3),
            _row("c6.phi_identity_imag", phi.imag, 0.0, 1e-3)]
    failed = [n for n, ok in [("f<=nu", c_maj), ("mean", c_mean), ("chi norm", c_norm), ("phi identity", c_phi)]
              if not ok]
    detail = f"E nu = {mean:.4f}; failing clauses: {', '.join(failed)}" if failed else ""
    return not failed, rows, detail


# ---------------------------------------------------------------------------
# 7. Gowers identities and inequalities


def random_spec(rng, d: int):
    from .gowers import GowersSpec

    t = int(rng.integers(0, 2))
    H = int(rng.integers(1, 3))
    L = int(rng.integers(2, 4))
    Qs = []
    for _ in range(d):
        while True:
            a = [int(v) for v in rng.integers(-4, 5, size=t + 1)]
            Q = MultiPoly(t + 1, {tuple(int(j == i) for j in range(t + 1)): c for i, c in enumerate(a) if c})
            if not Q.is_zero():
                break
        Qs.append(Q)
    return GowersSpec(d, t, tuple(Qs), H, 1, L)


def tensor_instance(rng):
    A = int(rng.integers(1, 4))
    shape = tuple(int(v) for v in rng.integers(2, 5 if A < 3 else 4, size=A))
    f = rng.uniform(-1, 1, size=shape)
    f_omegas = [rng.uniform(-1, 1, size=shape) for _ in range(2 ** A)]
    f_alpha, nu_alpha = [], []
    for a in range(A):
        sub = tuple(n for i, n in enumerate(shape) if i != a)
        nu = rng.uniform(0, 2, size=sub)
        nu_alpha.append(nu)
        f_alpha.append(nu * rng.uniform(-1, 1, size=sub))
    return f, f_alpha, nu_alpha, f_omegas


@_timed(7, "Gowers identities and inequalities", None)
def criterion_7(cfg):
    from .gowers import domination_check, fundamental_identity, weighted_box_check
    from .sieve import CyclicFn

    rng = _rng(cfg, 7)
    worst_rel, id_fail = 0.0, 0
    for _ in range(cfg.get_int("c7.identity")):
        N = int(rng.integers(8, 65))
        f = CyclicFn(N, rng.normal(size=N))
        lhs, power = fundamental_identity(f, random_spec(rng, 2))
        rel = abs(lhs - power) / abs(power)
        worst_rel = max(worst_rel, rel)
        id_fail += abs(lhs - power) > 1e-9 * abs(power)
    worst_dom, dom_fail = math.inf, 0
    for _ in range(cfg.get_int("c7.domination")):
        N = int(rng.integers(8, 65))
        f = CyclicFn(N, rng.normal(size=N))
        s1, s2 = random_spec(rng, 2), random_spec(rng, int(rng.integers(1, 3)))
        s2 = type(s2)(s2.d, s2.t, s2.Qvec, s1.H, s1.W_value, s1.sqrtM)
        for rep in domination_check(f, [s1, s2]):
            worst_dom = min(worst_dom, rep.slack)
            dom_fail += rep.slack < -1e-12
    worst_csg = worst_gvn = math.inf
    ten_fail = 0
    for _ in range(cfg.get_int("c7.tensors")):
        f, fa, na, fo = tensor_instance(rng)
        rep = weighted_box_check(f, fa, na, fo)
        worst_csg = min(worst_csg, rep.csg.slack)
        worst_gvn = min(worst_gvn, rep.gvn.slack)
        ten_fail += not rep.holds(1e-12)
    rows = [_row("c7.identity_failures", id_fail, 0, 0), _row("c7.identity_max_rel_error", worst_rel, 0, 1e-9),
            _row("c7.domination_failures", dom_fail, 0, 0), _row("c7.domination_min_slack", worst_dom, None, -1e-12),
            _row("c7.tensor_failures", ten_fail, 0, 0), _row("c7.csg_min_slack", worst_csg, None, -1e-12),
            _row("c7.gvn_min_slack", worst_gvn, None, -1e-12)]
    return id_fail == 0 and dom_fail == 0 and ten_fail == 0, rows, ""


# ---------------------------------------------------------------------------
# 8. PET linearizer

EXAMPLE_FIRST_STEP = (
    "1 (inactive): 0",
    "2: m + h1",
    "3*: m^2 + 2*m*h1 + h1^2",
    "2': m + h2",
    "3': m^2 + 2*m*h2 + h2^2",
)


def load_corpus() -> list[str]:
    text = resources.files("polyprog").joinpath("data/families.txt").read_text()
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


@_timed(8, "PET linearizer", None)
def criterion_8(cfg):
    from .pet import linearize, make_system, next_target, vdc_step

    fam = parse_family(cfg.get("c8.family"))
    base = make_system(fam, W_symbolic=False, distinguished=len(fam))
    res = linearize(base)
    decreasing = all(r.weight_after < r.weight_before for r in res.steps)
    first, _, _ = vdc_step(base, next_target(base))
    structure_ok = tuple(first.describe()) == EXAMPLE_FIRST_STEP
    b_ok = all(not b.is_zero() for b in res.b) and len(set(res.b)) == len(res.b)
    rows = [_row("c8.steps", len(res.steps)), _row("c8.weights_decrease", decreasing, True),
            _row("c8.first_step_matches_example", structure_ok, True),
            _row("c8.b_distinct_nonzero", b_ok, True), _row("c8.d", res.d), _row("c8.t", res.t)]
    deadline = cfg.get_float("c8.deadline")
    slow = []
    for text in load_corpus():
        polys = parse_family(text)
        t0 = time.perf_counter()
        try:
            out = linearize(make_system(polys), deadline=deadline)
            note, steps = f"d={out.d} t={out.t}", len(out.steps)
        except ResourceError:
            note, steps = "stopped at the deadline", -1
        elapsed = time.perf_counter() - t0
        done = steps >= 0 and elapsed < deadline
        if not done:
            slow.append(text)
        rows.append(_row(f"c8.corpus[{text}].terminated", done, True, None, note))
    ok = decreasing and structure_ok and b_ok and not slow
    detail = f"no termination within {deadline:g} s for: {' | '.join(slow)}" if slow else ""
    return ok, rows, detail


# ---------------------------------------------------------------------------
# 9. structure decomposition


@_timed(9, "structure decomposition", 300.0)
def criterion_9(cfg):
    from .pet import linearize, make_system
    from .structure import ENERGY_CONSTANT, knvn_decompose

    eta4, eta5 = cfg.get_float("c9.eta4"), cfg.get_float("c9.eta5")
    params, _, _, nu_fn, _ = sieve_setup(cfg.get_int("c9.N"), cfg.get_float("c9.w"), 0.25)
    res = linearize(make_system(parse_family(cfg.get("c9.family"))))
    spec = res.spec_with(cfg.get_int("c9.H"), params.W, cfg.get_int("c9.sqrtM"))
    g = nu_fn
    dec = knvn_decompose(g, nu_fn, spec, eta4, eta5, seed=cfg.seed % 2 ** 32)
    cap = int(4.0 / (ENERGY_CONSTANT * eta4 * eta4)) + 1
    b = dec.bounds(g)
    tol = 1e-12
    checks = {
        "iterations_within_cap": dec.iterations <= cap,
        "structured_in_range": b["structured_lower"] <= tol and b["structured_upper"] <= tol,
        "sum_sandwich": b["sum_lower"] <= tol and b["sum_upper"] <= tol,
        "mass": b["mass_deficit"] <= 0.25,
        "uniform_correlation": b["correlation"] <= eta4,
    }
    rows = [_row("c9.iterations", dec.iterations, None, cap), _row("c9.sigma", dec.sigma),
            _row("c9.sigma_mass_only", dec.sigma_mass), _row("c9.mean_g", g.mean())]
    rows += [_row(f"c9.{k}", v, None, None) for k, v in b.items()]
    rows += [_row(f"c9.check.{k}", v, True) for k, v in checks.items()]
    for r in dec.trace:
        rows.append(_row(f"c9.trace[{r.K}]", r.correlation, None, eta4,
                         f"sigma={r.sigma:.12g} energy={r.energy:.12g} atoms={r.atoms}"))
    return all(checks.values()), rows, ""


# ---------------------------------------------------------------------------
# 10. progression counting against a naive loop


@functools.lru_cache(maxsize=None)
def _naive_prime(n: int) -> bool:
    return is_prime(n)


def naive_count(polys: list[MultiPoly], N: int, M: int) -> int:
    total = 0
    for m in range(1, M + 1):
        shifts = [P.evaluate((m,)) for P in polys]
        for x in range(1, N + 1):
            if all(_naive_prime(x + s) for s in shifts):
                total += 1
    return total


def progression_corpus(rng, count: int):
    from .progressions import ProgressionSpec

    out = []
    while len(out) < count:
        k = int(rng.integers(1, 4))
        polys = set()
        while len(polys) < k:
            deg = int(rng.integers(1, 4))
            coeffs = [0] + [int(v) for v in rng.integers(-3, 4, size=deg)]
            polys.add(MultiPoly.from_coeffs(coeffs))
        out.append(ProgressionSpec(tuple(sorted(polys, key=str)), int(rng.integers(1, 2001)),
                                   int(rng.integers(1, 51))))
    return out


@_timed(10, "progression counts against the naive loop", None)
def criterion_10(cfg):
    from .progressions import count_progressions
    from .sieve import build_prime_table

    specs = progression_corpus(_rng(cfg, 10), cfg.get_int("c10.specs"))
    need = max(s.N + max(0, int(s.shift_table().max())) for s in specs)
    table = build_prime_table(need)
    mism = 0
    total = 0
    for s in specs:
        got = count_progressions(s, table).count
        total += got
        mism += got != naive_count(list(s.polys), s.N, s.M)
    rows = [_row("c10.specs", len(specs)), _row("c10.total_count", total),
            _row("c10.mismatches", mism, 0, 0, "exact")]
    return mism == 0, rows, ""


# ---------------------------------------------------------------------------
# 11. prediction diagnostic


@_timed(11, "Bateman-Horn diagnostic for (0, m)", 60.0)
def criterion_11(cfg):
    from .progressions import HEURISTIC, ProgressionSpec, prediction_check
    from .sieve import build_prime_table

    N, M = cfg.get_int("c11.N"), cfg.get_int("c11.M")
    lo, hi = cfg.get_list("c11.band", cast=float)
    spec = ProgressionSpec(tuple(parse_family("0; m")), N, M)
    rep = prediction_check(spec, build_prime_table(N + M), cfg.get_float("c11.P0"))
    rows = [_row("c11.observed", rep.observed), _row("c11.predicted", rep.predicted, None, None, HEURISTIC),
            _row("c11.gamma", rep.gamma, None, None, HEURISTIC),
            _row("c11.ratio", rep.ratio, 1.0, f"[{lo:g}, {hi:g}]", "diagnostic")]
    return lo <= rep.ratio <= hi, rows, f"observed/predicted = {rep.ratio:.4f}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7, criterion_8, criterion_9, criterion_10, criterion_11]


def run_suite(cfg: RunConfig, only: list[int] | None = None) -> list[CriterionResult]:
    return [c(cfg) for c in CRITERIA if only is None or c.number in only]


def reproducibility(first: tuple[str, str], second: tuple[str, str]) -> CriterionResult:
    """Criterion 12 from two rendered ``(csv, json)`` pairs."""
    same = first == second
    rows = [_row("c12.byte_identical", same, True), _row("c12.verdict", same, note="PASS" if same else "FAIL")]
    return CriterionResult(12, "byte-identical reports for the same seed", same, rows)
