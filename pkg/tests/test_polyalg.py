import sympy
from sympy.polys.subresultants_qq_zz import sylvester
import pytest
from hypothesis import given, strategies as st

from polyprog.errors import ArgumentError
from polyprog.polyalg import (
    BAD_NOT_TERRIBLE, GOOD, TERRIBLE, MultiPoly, classify_prime, coprime_mod_p, gcd_mod_p,
    is_prime, jointly_coprime_mod_p, pairwise_coprime_mod_p, parse_family, parse_poly, resultant,
)

X, Y = sympy.symbols("x1 x2")


def to_sympy(P: MultiPoly):
    syms = sympy.symbols(" ".join(f"x{i + 1}" for i in range(P.nvars)))
    if P.nvars == 1:
        syms = (syms,)
    return sum(c * sympy.Mul(*[s ** k for s, k in zip(syms, e)]) for e, c in P.items())


small_coeffs = st.lists(st.integers(-6, 6), min_size=1, max_size=5)


def test_parse_roundtrip():
    P = parse_poly("3*x1^2*x2 - x2 + 7", ["x1", "x2"])
    assert P.evaluate((2, 5)) == 3 * 4 * 5 - 5 + 7
    assert P.total_degree() == 3
    assert parse_poly("(x+1)^2", ["x"]) == parse_poly("x^2 + 2x + 1", ["x"])


def test_parse_family_shares_variable():
    fam = parse_family("0; m; m^2")
    assert [P.evaluate((3,)) for P in fam] == [0, 3, 9]


def test_parse_rejects_garbage():
    with pytest.raises(ArgumentError):
        parse_poly("x + $", ["x"])


def test_linear_resultant_is_determinant():
    a, b, c, d = 2, 3, -1, 5
    P = MultiPoly.from_coeffs([a, b])
    Q = MultiPoly.from_coeffs([c, d])
    assert resultant(P, Q, 0, 1, 1).constant_term() == a * d - b * c


@given(small_coeffs, small_coeffs)
def test_resultant_matches_sympy_sylvester(p, q):
    P, Q = MultiPoly.from_coeffs(p), MultiPoly.from_coeffs(q)
    dP, dQ = P.degree_in(0), Q.degree_in(0)
    if dP < 1 or dQ < 1:
        return
    x = sympy.Symbol("x1")
    ours = resultant(P, Q, 0, dP, dQ).constant_term()
    ref = sylvester(to_sympy(P), to_sympy(Q), x, 1).det()
    # our matrix is sympy's with columns and both row blocks reversed
    n = dP + dQ
    sign = (-1) ** (n * (n - 1) // 2 + dP * (dP - 1) // 2 + dQ * (dQ - 1) // 2)
    assert ours == sign * ref


@given(small_coeffs, small_coeffs, st.sampled_from([2, 3, 5, 7, 11]))
def test_gcd_degree_matches_sympy(p, q, prime):
    P, Q = MultiPoly.from_coeffs(p), MultiPoly.from_coeffs(q)
    g = gcd_mod_p(P, Q, prime)
    ref = sympy.gcd(sympy.Poly(to_sympy(P), sympy.Symbol("x1"), modulus=prime),
                    sympy.Poly(to_sympy(Q), sympy.Symbol("x1"), modulus=prime))
    if ref.is_zero:
        assert all(c % prime == 0 for c in g.terms.values())
    else:
        assert g.total_degree() == ref.degree()


def test_multivariate_gcd():
    P = parse_poly("(x1 + x2) * (x1 - 1)", ["x1", "x2"])
    Q = parse_poly("(x1 + x2) * (x2 + 2)", ["x1", "x2"])
    g = gcd_mod_p(P, Q, 7)
    assert g.total_degree() == 1
    assert not coprime_mod_p(P, Q, 7)


def test_coprime_predicates():
    fam = [parse_poly(s, ["x1", "x2"]) for s in ("x1*x2", "x1*(x2+1)", "x2*(x2+1)")]
    assert jointly_coprime_mod_p(fam, 5)
    ok, witness = pairwise_coprime_mod_p(fam, 5)
    assert not ok and witness == (0, 1)


@given(st.integers(-10, 10_000))
def test_is_prime_matches_sympy(n):
    assert is_prime(n) == sympy.isprime(n)


def test_classification_tags():
    fam = [parse_poly(s, ["x1", "x2"]) for s in ("x1*x2 + 1", "x1 + x2")]
    assert classify_prime(7, fam).tag == GOOD
    two = [parse_poly(s, ["x1"]) for s in ("2*x1", "x1 + 1")]
    assert classify_prime(2, two).tag == TERRIBLE
    sq = [parse_poly("x1^2 + 1", ["x1"]), parse_poly("x1 + 2", ["x1"])]
    assert classify_prime(5, sq).tag in (GOOD, BAD_NOT_TERRIBLE)
