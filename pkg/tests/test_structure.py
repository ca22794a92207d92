import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polyprog.errors import ArgumentError, InvariantError
from polyprog.gowers import GowersSpec
from polyprog.pet import linearize, make_system
from polyprog.polyalg import parse_family
from polyprog.sieve import CyclicFn
from polyprog.structure import (
    Factor, KNVNDecomposition, cond_exp, energy, factor_from_function, join, knvn_decompose,
    orthogonality_report, refine_bad_set,
)

N = 256


@pytest.fixture(scope="module")
def spec():
    return linearize(make_system(parse_family("0; m"))).spec_with(2, 1, 4)


@pytest.fixture
def ones():
    return CyclicFn(N, np.ones(N))


def random_factor(seed, n=N, k=7):
    return Factor.from_labels(np.random.default_rng(seed).integers(0, k, n))


@given(st.integers(0, 10_000))
def test_cond_exp_is_a_projection(seed):
    rng = np.random.default_rng(seed)
    Y = random_factor(seed)
    f = CyclicFn(N, rng.normal(size=N))
    g = CyclicFn(N, rng.normal(size=N))
    Ef = cond_exp(f, Y)
    np.testing.assert_allclose(cond_exp(Ef, Y).values, Ef.values, atol=1e-12)
    # self-adjoint: <E f, g> = <f, E g>
    assert np.mean(Ef.values * g.values) == pytest.approx(np.mean(f.values * cond_exp(g, Y).values), abs=1e-12)
    assert Y.is_measurable(Ef.values, 1e-12)


@given(st.integers(0, 10_000))
def test_join_identities(seed):
    Y, Z = random_factor(seed), random_factor(seed + 1, k=3)
    J = join(Y, Z)
    assert J.same_partition(join(Z, Y))
    assert J.same_partition(join(J, Y))
    assert join(Y, Factor.trivial(N)).same_partition(Y)
    assert join(Y, Factor.discrete(N)).atom_count == N


def test_level_set_factor():
    G = CyclicFn(N, np.arange(N) / N)
    Y = factor_from_function(G, 0.25, alpha=0.0)
    assert Y.atom_count == 4
    assert Y.is_measurable(np.floor(G.values / 0.25))
    shifted = factor_from_function(G, 0.25, alpha=0.5)
    assert shifted.atom_count == 5
    assert factor_from_function(G, 0.25, seed=3).same_partition(factor_from_function(G, 0.25, seed=3))


def test_refine_bad_set_marks_light_atoms(ones):
    labels = np.zeros(N, dtype=int)
    labels[:2] = 1
    rep = refine_bad_set(Factor.from_labels(labels), ones, threshold=0.05)
    assert rep.small_atoms == [1]
    assert rep.mask.sum() == 2
    assert rep.mass == pytest.approx(2 * 2 / N)
    assert rep.max_good_deviation == 0.0


def test_energy_ignores_exceptional_set(ones):
    Y = Factor.trivial(N)
    assert energy(ones, Y, np.zeros(N, dtype=bool)) == pytest.approx(1.0)
    assert energy(ones, Y, np.ones(N, dtype=bool)) == 0.0


def test_zero_function_needs_no_iterations(spec, ones):
    res = knvn_decompose(CyclicFn(N, np.zeros(N)), ones, spec, 0.1, 1e-3)
    assert res.iterations == 0
    assert np.all(res.g_structured.values == 0) and np.all(res.g_uniform.values == 0)


def test_periodic_indicator_single_iteration(spec, ones):
    g = CyclicFn(N, (np.arange(N) % 4 == 0).astype(float))
    res = knvn_decompose(g, ones, spec, 0.01, 1e-3)
    assert res.iterations == 1
    b = res.bounds(g)
    for key in ("structured_lower", "structured_upper", "sum_lower", "sum_upper", "mismatch_mass"):
        assert b[key] <= 1e-12
    assert res.final_correlation <= 0.01


def test_half_interval_satisfies_bounds(spec, ones):
    g = CyclicFn(N, (np.arange(N) < N // 2).astype(float))
    res = knvn_decompose(g, ones, spec, 0.02, 1e-3)
    assert res.iterations == 1
    b = res.bounds(g)
    # off the exceptional set the pieces sum to g / (1 + sigma), not g
    assert res.sigma > 0 and b["mismatch_mass"] > 0
    assert max(b["structured_lower"], b["structured_upper"], b["sum_lower"], b["sum_upper"]) <= 1e-12
    assert res.omega.any()


def test_moderate_threshold_stops_immediately(spec, ones):
    g = CyclicFn(N, (np.random.default_rng(0).random(N) < 0.5).astype(float))
    res = knvn_decompose(g, ones, spec, 0.1, 1e-3)
    assert res.iterations == 0
    np.testing.assert_allclose(res.g_structured.values + res.g_uniform.values, g.values, atol=1e-12)


def test_energy_failure_carries_trace(spec, ones):
    g = CyclicFn(N, (np.random.default_rng(0).random(N) < 0.5).astype(float))
    with pytest.raises(InvariantError) as info:
        knvn_decompose(g, ones, spec, 0.02, 1e-3)
    trace = info.value.trace
    assert len(trace) >= 2
    assert trace[-1].energy < trace[0].energy


def test_input_validation(spec, ones):
    with pytest.raises(ArgumentError):
        knvn_decompose(CyclicFn(N, np.full(N, 2.0)), ones, spec, 0.1, 1e-3)
    with pytest.raises(ArgumentError):
        knvn_decompose(ones, ones, spec, 0.0, 1e-3)


def test_orthogonality_report_of_flat_majorant(spec, ones):
    f = CyclicFn(N, np.random.default_rng(1).uniform(-1, 1, N))
    rep = orthogonality_report([f, f], ones, spec)
    assert rep.value == 0.0 and rep.bound == 0.0


def test_estimator_transform_sums_to_input():
    rng = np.random.default_rng(2)
    nu_col = rng.uniform(0.5, 1.5, 128)
    g_col = nu_col * (rng.random(128) < 0.3)
    X = np.column_stack([g_col, nu_col])
    est = KNVNDecomposition(family="0; m", eta4=0.2).fit(X)
    out = est.transform(X)
    assert out.shape == (128, 2)
    assert est.n_iter_ == 0
    np.testing.assert_allclose(out.sum(axis=1), g_col, atol=1e-12)


def test_sieve_majorant_golden_trace(tmp_path):
    import csv
    from pathlib import Path

    from polyprog.cli import run

    assert run(["decompose", "--out", str(tmp_path)]) == 0
    lines = [ln for ln in (tmp_path / "decompose.csv").read_text().splitlines() if not ln.startswith("#")]
    got = list(csv.DictReader(lines))
    golden = list(csv.DictReader((Path(__file__).parent / "data" / "decompose_golden.csv").open()))
    assert [r["quantity"] for r in got] == [r["quantity"] for r in golden]
    for a, b in zip(got, golden):
        assert float(a["value"]) == pytest.approx(float(b["value"]), rel=1e-9, abs=1e-15)
    bounds = {r["quantity"]: float(r["value"]) for r in got}
    for key in ("structured_lower", "structured_upper", "sum_lower", "sum_upper"):
        assert bounds[key] <= 0.05
