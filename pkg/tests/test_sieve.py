import math

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from polyprog.convexlat import Box
from polyprog.errors import ArgumentError
from polyprog.polyalg import parse_family
from polyprog.sieve import (
    CyclicFn, SieveMajorant, build_prime_table, check_majorant, derive_params, divisor_count_bound, explog_check,
    make_cutoff, mertens_sum, nu, nu_reference, polyform_average, prime_weight_f, totient_of_primorial,
)


@pytest.fixture(scope="module")
def setup():
    table = build_prime_table(70_000)
    params = derive_params(60_000, 5, R=60_000 ** 0.25 / 3, table=table)
    chi = make_cutoff("bump")
    return params, table, chi, nu(params, chi, table)


def test_table_matches_sympy(table):
    n = np.arange(0, 3000)
    ours = table.is_prime(n)
    assert [bool(v) for v in ours] == [sympy.isprime(int(v)) for v in n]
    assert table.mu[30] == -1 and table.mu[12] == 0 and table.mu[35] == 1


@given(st.integers(1, 200_000))
def test_factorization_roundtrip(table, n):
    assert math.prod(p ** e for p, e in table.factor(n)) == n


def test_primorial():
    assert totient_of_primorial(5) == (6, 2)
    assert totient_of_primorial(8) == (210, 48)


def test_params_residue_and_size(setup):
    params, *_ = setup
    assert params.W == 6 and params.N == 5000
    assert math.gcd(params.b, params.W) == 1


def test_w_too_large_rejected():
    with pytest.raises(ArgumentError):
        derive_params(1000, 8, R=5.0)


@pytest.mark.parametrize("shape", ["bump", "smoothstep", "linear"])
def test_cutoff_normalization(shape):
    chi = make_cutoff(shape)
    assert chi.norm_integral() == pytest.approx(1.0, abs=1e-9)
    assert chi(1.0) == 0.0 and chi(-0.3) == chi(0.3)


def test_phi_identity_bump():
    assert abs(make_cutoff("bump").phi_identity() - 1.0) < 1e-3


def test_nu_matches_factoring_oracle(setup):
    params, table, chi, nu_fn = setup
    xs = list(range(1, 400)) + list(range(params.N - 50, params.N + 1))
    ref = nu_reference(params, chi, table, xs)
    got = nu_fn.on_interval()[xs]
    np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-12)


def test_majorant_exact(setup):
    params, table, chi, nu_fn = setup
    f = prime_weight_f(params, table, chi=chi)
    rep = check_majorant(f, nu_fn)
    assert rep.holds and rep.violations == 0
    assert np.all(nu_fn.values >= 0)
    assert divisor_count_bound(params, table, nu_fn)


def test_literal_weight_matches_linear_cutoff(setup):
    params, table, _, _ = setup
    # the literal variant ignores chi and puts the bare normalizer on each kept point
    f = prime_weight_f(params, table, literal=True)
    assert set(np.unique(f.values)) <= {0.0, params.normalizer}


def test_cyclic_interval_roundtrip():
    arr = np.r_[np.nan, np.arange(1.0, 8.0)]
    g = CyclicFn.from_interval(arr)
    assert g.values[0] == 7.0 and g.values[3] == 3.0
    np.testing.assert_array_equal(g.on_interval()[1:], arr[1:])


def test_polyform_average_of_constant(setup):
    params, *_ = setup
    one = CyclicFn(params.N, np.ones(params.N))
    fam = parse_family("0; h; 2h", names=("h",))
    rep = polyform_average(one, fam, Box((0.0,), (11.0,)), params)
    assert rep.value == pytest.approx(1.0, abs=1e-12)


def test_prime_sums(table):
    # sum_{p < x} 1/p = log log x + 0.2615 + o(1)
    assert mertens_sum(10**5, table) == pytest.approx(math.log(math.log(1e5)) + 0.2615, abs=0.01)
    chk = explog_check([2, 3, 5, 7], 1)
    assert chk.lhs <= chk.witness_constant * chk.rhs_sum + 1e-12


def test_estimator_roundtrip():
    est = SieveMajorant(N_prime=60_000, w=5).fit()
    out = est.transform([1, 2, 3, 100])
    assert out.shape == (4, 2)
    assert np.all(out[:, 1] <= out[:, 0])
    with pytest.raises(ArgumentError):
        est.transform([0])
