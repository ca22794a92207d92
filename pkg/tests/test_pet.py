import pytest

from polyprog.errors import ArgumentError, ResourceError
from polyprog.pet import WeightVector, linearize, make_system, next_target, vdc_step, weight_vector
from polyprog.polyalg import parse_family

FIRST_STEP = (
    "1 (inactive): 0",
    "2: m + h1",
    "3*: m^2 + 2*m*h1 + h1^2",
    "2': m + h2",
    "3': m^2 + 2*m*h2 + h2^2",
)

# family -> (d, t); each terminates well inside a second
FAMILIES = {
    "0; m": (2, 0),
    "0; 2m": (2, 0),
    "0; m; 2m": (2, 0),
    "m; m^2": (2, 2),
    "0; m^2": (2, 2),
    "0; m; m^2": (3, 2),
    "0; m^2; m^2 + m": (3, 4),
    "0; m^2; 2m^2": (7, 6),
    "0; m^3": (2, 4),
}


def test_weight_order_compares_top_entry_first():
    assert WeightVector((5, 1)) < WeightVector((0, 2))
    assert WeightVector((1, 0, 0)) == WeightVector((1,))
    assert WeightVector((1,)).is_linear and not WeightVector((0, 1)).is_linear


def test_first_step_of_quadratic_example():
    base = make_system(parse_family("0; m; m^2"), W_symbolic=False, distinguished=3)
    first, _, rec = vdc_step(base, next_target(base))
    assert tuple(first.describe()) == FIRST_STEP
    assert rec.weight_after < rec.weight_before


def test_quadratic_example_full_run():
    base = make_system(parse_family("0; m; m^2"), W_symbolic=False, distinguished=3)
    res = linearize(base)
    assert (res.d, res.t) == (3, 4)
    assert res.qvec_strings() == ["-2*h1 + 2*h2", "-2*h3 + 2*h4", "-2*h1 + 2*h2 - 2*h3 + 2*h4"]
    assert all(r.weight_after < r.weight_before for r in res.steps)


@pytest.mark.parametrize("family,shape", sorted(FAMILIES.items()))
def test_family_linearizes(family, shape):
    res = linearize(make_system(parse_family(family)), deadline=10)
    assert (res.d, res.t) == shape
    assert all(not b.is_zero() for b in res.b)
    assert len(set(res.b)) == len(res.b)


def test_short_families_are_padded():
    res = linearize(make_system(parse_family("0; m")))
    assert res.qvec_strings() == ["1", "1"]
    res = linearize(make_system(parse_family("0")))
    assert res.d == 2


def test_weight_vector_of_base_system():
    sys = make_system(parse_family("0; m; m^2"))
    assert weight_vector(sys, 1)[2] == 1


def test_deadline_is_enforced():
    with pytest.raises(ResourceError, match="deadline"):
        linearize(make_system(parse_family("0; m^2; m^3")), deadline=0.5)


def test_invalid_systems():
    with pytest.raises(ArgumentError):
        make_system(parse_family("0; m; m"))
    with pytest.raises(ArgumentError):
        make_system(parse_family("0; m"), distinguished=3)
    with pytest.raises(ArgumentError):
        make_system(parse_family("1; m"))
