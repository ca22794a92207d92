import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polyprog.errors import ArgumentError
from polyprog.gowers import (
    GowersSpec, avg_local_gowers, bad_set, box_norm, box_norm_power, concatenate_specs, csg_check,
    domination_check, dual_function, fundamental_identity, gowers_estimate, local_gowers, modified_dual,
    vdc_check, weighted_box_check, weighted_gvn_check,
)
from polyprog.polyalg import parse_poly
from polyprog.sieve import CyclicFn


def rand_fn(N, seed, lo=-1.0):
    return CyclicFn(N, np.random.default_rng(seed).uniform(lo, 1.0, N))


def linear_spec(H=2, sqrtM=3):
    names = ["h1", "W"]
    Q = (parse_poly("h1 + W", names), parse_poly("2*h1", names))
    return GowersSpec(2, 1, Q, H, 1, sqrtM)


def test_point_mass_standard_u2():
    f = CyclicFn(5, np.eye(5)[0])
    assert local_gowers(f, (1, 1), 5) == pytest.approx(5 ** -0.75, rel=1e-12)


def test_constant_has_norm_equal_to_value():
    f = CyclicFn(16, np.full(16, 0.7))
    assert avg_local_gowers(f, linear_spec()) == pytest.approx(0.7, rel=1e-12)


def test_rank_one_box_norm():
    F = np.outer([1.0, 2.0, 3.0], [-1.0, 4.0])
    assert box_norm(F) == pytest.approx(np.sqrt(14 / 3 * 17 / 2), rel=1e-12)
    assert box_norm(F) == pytest.approx(6.298147875897062, rel=1e-12)


def test_box_norm_brute_force():
    F = np.random.default_rng(3).normal(size=(3, 4))
    acc = 0.0
    for a0, a1, b0, b1 in itertools.product(range(3), range(3), range(4), range(4)):
        acc += F[a0, b0] * F[a0, b1] * F[a1, b0] * F[a1, b1]
    assert box_norm_power(F) == pytest.approx(acc / 144, rel=1e-12)


@given(st.integers(0, 10_000))
def test_fundamental_identity(seed):
    f = rand_fn(24, seed)
    lhs, rhs = fundamental_identity(f, linear_spec())
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-14)


def test_sampled_mode_within_standard_errors():
    f = rand_fn(32, 1, lo=0.0)
    spec = linear_spec()
    exact = gowers_estimate(f, spec, "exact")
    sampled = gowers_estimate(f, spec, "sampled", samples=100_000, seed=7)
    assert abs(sampled.power - exact.power) <= 5 * sampled.stderr
    again = gowers_estimate(f, spec, "sampled", samples=100_000, seed=7)
    assert again.power == sampled.power


def test_bad_set_and_modified_dual():
    nu_fn = CyclicFn(20, np.ones(20))
    spec = linear_spec()
    omega = bad_set(nu_fn, spec)
    assert omega.size == 0  # D1 = 1 < 2^4
    f = rand_fn(20, 2)
    mod, _ = modified_dual(f, nu_fn, spec, omega)
    np.testing.assert_allclose(mod.values, dual_function(f, spec).values)


@given(st.integers(0, 10_000))
def test_csg_inequality(seed):
    rng = np.random.default_rng(seed)
    fs = [rng.normal(size=(3, 3)) for _ in range(4)]
    assert csg_check(fs).holds(1e-12)


@given(st.integers(0, 10_000))
def test_weighted_gvn(seed):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=(3, 4))
    nus = [rng.uniform(0.5, 2.0, size=4), rng.uniform(0.5, 2.0, size=3)]
    fa = [n * rng.uniform(-1, 1, size=n.shape) for n in nus]
    assert weighted_gvn_check(f, fa, nus).holds(1e-12)
    assert weighted_box_check(f, fa, nus).holds(1e-12)


def test_gvn_rejects_undominated():
    with pytest.raises(ArgumentError):
        weighted_gvn_check(np.ones((2, 2)), [np.full(2, 2.0), np.ones(2)], [np.ones(2), np.ones(2)])


def test_concatenation_and_domination():
    a, b = linear_spec(), linear_spec()
    big = concatenate_specs(a, b)
    assert (big.d, big.t) == (4, 2)
    g = rand_fn(12, 5, lo=0.0)
    assert all(r.holds(1e-12) for r in domination_check(g, [a, b]))


@given(st.lists(st.floats(-5, 5), min_size=12, max_size=12), st.integers(1, 6), st.integers(1, 6))
def test_van_der_corput(xs, M, H):
    rep = vdc_check(xs, M, H)
    assert rep.holds(1e-9)


def test_spec_validation():
    with pytest.raises(ArgumentError):
        GowersSpec(1, 0, (parse_poly("0", ["W"]),), 1, 1, 1)
