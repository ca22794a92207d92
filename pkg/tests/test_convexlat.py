import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polyprog.convexlat import (
    Box, HalfspaceSet, average_periodic, gauss_check, inradius, lattice_equidistribution, lattice_points,
    simplex, sup_box_average,
)
from polyprog.errors import ArgumentError


def test_box_counts_are_open():
    # integers strictly inside (0, 10): 1..9
    assert lattice_points(Box((0.0,), (10.0,))).count == 9
    assert lattice_points(Box((0.0, 0.0), (10.0, 5.0))).count == 9 * 4


@given(st.floats(-50, 50), st.floats(0.5, 60), st.integers(1, 7), st.integers(0, 6))
def test_box_closed_form_matches_enumeration(lo, width, m, a):
    body = Box((lo,), (lo + width,))
    fast = lattice_points(body, m, a).count
    slow = lattice_points(body, m, a, enumerate_points=True).count
    assert fast == slow


def test_inradius_of_box_and_simplex():
    assert inradius(Box((0.0, 0.0), (4.0, 10.0))) == pytest.approx(2.0, abs=1e-9)
    # right simplex with legs s: r = s / (2 + sqrt 2)
    assert inradius(simplex(2, 10.0)) == pytest.approx(10.0 / (2 + math.sqrt(2)), rel=1e-7)


def test_halfspace_contains_and_counts():
    tri = simplex(2, 6.0)
    pts = lattice_points(tri, enumerate_points=True).points
    assert np.all(pts.sum(axis=1) < 6) and np.all(pts > 0)
    assert len(pts) == sum(1 for x in range(1, 6) for y in range(1, 6) if x + y < 6)


def test_equidistribution_on_large_box():
    body = Box((0.0, 0.0), (301.0, 301.0))
    assert abs(lattice_equidistribution(body, 3, (1, 2))) < 0.02
    g = gauss_check(body, 3, (1, 2))
    assert abs(g.epsilon) < 0.02


def test_average_periodic_requires_large_inradius():
    with pytest.raises(ArgumentError):
        average_periodic(Box((0.0, 0.0), (10.0, 10.0)), lambda r: r.sum(axis=1) % 2, m=5, C_D=10)
    rep = average_periodic(Box((0.0, 0.0), (200.0, 200.0)), lambda r: (r.sum(axis=1) % 2 == 0), m=2, C_D=10)
    assert abs(rep.deviation) < 0.02


def test_covering_inequality_holds():
    body = Box((0.0, 0.0), (30.0, 30.0))
    rep = sup_box_average(body, lambda pts: (pts[:, 0] % 7 == 0).astype(float), C_D=3.0)
    assert rep.holds


def test_bad_boxes_rejected():
    with pytest.raises(ArgumentError):
        Box((1.0,), (1.0,))
    with pytest.raises(ArgumentError):
        HalfspaceSet(((1.0,),), (1.0, 2.0), Box((0.0,), (1.0,)))
