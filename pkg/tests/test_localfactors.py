from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, strategies as st

from polyprog.localfactors import (
    complementary_factor, crude_bound_checks, inclusion_exclusion, linear_partition, local_estimates_report,
    local_factor, local_factor_linear,
)
from polyprog.polyalg import MultiPoly, parse_poly


def brute(p, polys, D):
    zeros = sum(all(P.evaluate(pt) % p == 0 for P in polys) for pt in product(range(p), repeat=D))
    return Fraction(zeros, p ** D)


def test_sum_of_squares_plus_one():
    P = parse_poly("x^2 + 1", ["x"])
    assert local_factor(5, [P]) == Fraction(2, 5)
    assert local_factor(3, [P]) == 0
    assert local_factor(2, [P]) == Fraction(1, 2)


def test_empty_family_has_factor_one():
    assert local_factor(7, [], nvars=2) == 1
    assert complementary_factor(7, [], nvars=2) == 1


polys2 = st.lists(
    st.dictionaries(st.tuples(st.integers(0, 2), st.integers(0, 2)), st.integers(-4, 4), max_size=4),
    min_size=1, max_size=3,
)


@given(polys2, st.sampled_from([2, 3, 5, 7]))
def test_matches_brute_force(terms, p):
    fam = [MultiPoly(2, t) for t in terms]
    assert local_factor(p, fam, 2) == brute(p, fam, 2)


@given(polys2, st.sampled_from([2, 3, 5]))
def test_inclusion_exclusion_is_complement(terms, p):
    fam = [MultiPoly(2, t) for t in terms]
    assert inclusion_exclusion(p, fam, 2) == complementary_factor(p, fam, 2)


@pytest.mark.parametrize("text", ["x1*x2 + x3", "2*x1 + x2^2", "(x2 + 1)*x1 + x3 - x2"])
@pytest.mark.parametrize("p", [3, 5, 7])
def test_linear_partition_formula(text, p):
    P = parse_poly(text, ["x1", "x2", "x3"])
    lp = linear_partition(p, P, 0)
    assert lp.A + lp.B + lp.C == p ** 2
    assert local_factor_linear(p, P, 0) == local_factor(p, [P], 3)


def test_local_estimates_report_good_prime():
    fam = [parse_poly(s, ["x1", "x2"]) for s in ("x1*x2 + 1", "x1 + x2")]
    rep = local_estimates_report(7, fam)
    assert rep.prime_class.is_good
    assert all(c.holds for c in rep.clauses.values())
    assert rep.c_bar_p == inclusion_exclusion(7, fam, 2)


def test_crude_bounds_terrible_and_constant():
    fam = [parse_poly("3*x1", ["x1", "x2"]), parse_poly("x2 + 1", ["x1", "x2"])]
    out = crude_bound_checks(3, fam)
    assert out["ii"] is True
    const = [parse_poly("2", ["x1"])]
    assert crude_bound_checks(5, const)["iii"] is True
