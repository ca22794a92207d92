import math
from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from polyprog.errors import ArgumentError, ResourceError
from polyprog.localfactors import complementary_factor
from polyprog.polyalg import parse_poly
from polyprog.progressions import (
    HEURISTIC, ProgressionSpec, complementary_factor_fast, count_progressions, pattern_polys,
    prediction_check, singular_series, singular_series_forms, weighted_polynomial_average,
)
from polyprog.sieve import CyclicFn, build_prime_table, derive_params


def naive(polys, N, M):
    total = 0
    for m in range(1, M + 1):
        for x in range(1, N + 1):
            if all(sympy.isprime(x + P.evaluate((m,))) for P in polys):
                total += 1
    return total


@pytest.mark.parametrize("text,N,M", [("0; m", 50, 6), ("0; m; 2m", 200, 20), ("0; m^2", 150, 8),
                                      ("0; m; m^2", 120, 7)])
def test_counts_match_naive(table, text, N, M):
    spec = ProgressionSpec.parse(text, N, M)
    assert count_progressions(spec, table).count == naive(spec.polys, N, M)


def test_twin_like_pairs_with_small_gap(table):
    # pairs (x, x + m) of primes with x <= 50, m <= 6
    spec = ProgressionSpec.parse("0; m", 50, 6)
    brute = sum(1 for x in range(1, 51) for m in range(1, 7) if sympy.isprime(x) and sympy.isprime(x + m))
    res = count_progressions(spec, table, witnesses=3)
    assert res.count == brute
    assert res.witnesses[0] == (2, 1, 2, 3)


def test_witness_rows_are_prime(table):
    spec = ProgressionSpec.parse("0; m; 2m", 500, 30)
    for row in count_progressions(spec, table, witnesses=10).witnesses:
        assert all(sympy.isprime(v) for v in row[2:])


def test_table_too_small_is_reported():
    with pytest.raises(ResourceError):
        count_progressions(ProgressionSpec.parse("0; m", 100, 10), build_prime_table(50))


def test_spec_validation():
    with pytest.raises(ArgumentError):
        ProgressionSpec.parse("1; m", 10, 10)
    with pytest.raises(ArgumentError):
        ProgressionSpec.parse("0; m; m", 10, 10)


@pytest.fixture(scope="module")
def params(table):
    return derive_params(60_000, 5, R=3.0, table=table)


def test_weighted_average_of_constants(params):
    spec = ProgressionSpec.parse("0; m; 2m", 1, 5)
    one = CyclicFn(params.N, np.ones(params.N))
    assert weighted_polynomial_average(one, spec, params) == pytest.approx(1.0)
    c = CyclicFn(params.N, np.full(params.N, 0.3))
    assert weighted_polynomial_average(c, spec, params) == pytest.approx(0.3 ** 3)


def test_weighted_average_rejects_non_integral(params):
    spec = ProgressionSpec.parse("0; m^2", 1, 5)
    g = CyclicFn(params.N, np.ones(params.N))
    assert weighted_polynomial_average(g, spec, params) == pytest.approx(1.0)
    with pytest.raises(ArgumentError):
        weighted_polynomial_average(g, ProgressionSpec.parse("0; m", 1, 10**6), params)


@given(st.sampled_from(["0; m", "0; m; 2m", "0; m^2", "0; m; m^2", "0; m^2; m^3"]),
       st.sampled_from([2, 3, 5, 7, 11, 13]))
def test_closed_form_matches_enumeration(text, p):
    spec = ProgressionSpec.parse(text, 10, 10)
    assert complementary_factor_fast(p, spec) == complementary_factor(p, pattern_polys(spec), 2)


def test_single_form_has_unit_series():
    ss = singular_series(ProgressionSpec.parse("m", 10, 10), 200)
    assert ss.gamma == pytest.approx(1.0, abs=1e-12)
    assert ss.label == HEURISTIC


def test_pairs_factor_at_two():
    spec = ProgressionSpec.parse("0; m", 10, 10)
    ss = singular_series(spec, 100)
    assert ss.factors[2] == Fraction(1, 4)
    assert ss.factors[2] / (1 - Fraction(1, 2)) ** 2 == 1
    assert ss.terrible_prime is None


def test_terrible_prime_kills_the_series():
    x = parse_poly("x", ["x", "m"])
    ss = singular_series_forms([x, x + parse_poly("1", ["x", "m"])], 100)
    assert ss.gamma == 0.0 and ss.terrible_prime == 2


def test_prediction_is_in_the_right_range(table):
    spec = ProgressionSpec.parse("0; m", 20_000, 50)
    big = build_prime_table(20_100)
    rep = prediction_check(spec, big, 1000)
    assert 0.7 < rep.ratio < 1.3
