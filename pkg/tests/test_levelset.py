import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wte_reach.grid import GridSpec
from wte_reach.levelset import BoxSet, distance_field, signed_distance, terminal_field

BOX = BoxSet((0, 0, 0), (5, 10, 100))
DOMAIN = BoxSet((0, 0, 0), (50, 20, 100))
coord = st.floats(-20, 120)
point = st.tuples(coord, coord, coord)


def test_examples():
    assert signed_distance(BOX, (2.5, 5, 50)) == -2.5
    assert signed_distance(BOX, (8, 5, 50)) == 3
    assert signed_distance(BOX, (8, 14, 50)) == pytest.approx(5)
    assert signed_distance(BOX, (5, 5, 50)) == 0


def test_box_validation():
    with pytest.raises(ValueError):
        BoxSet((1, 0, 0), (0, 1, 1))
    assert BOX.is_subset_of(DOMAIN) and not DOMAIN.is_subset_of(BOX)
    assert BOX.volume == 5000


@given(point, point)
def test_lipschitz(a, b):
    da, db = signed_distance(BOX, a), signed_distance(BOX, b)
    assert abs(da - db) <= np.linalg.norm(np.subtract(a, b)) + 1e-9


@given(point)
def test_sign_matches_membership(z):
    assert (signed_distance(BOX, z) <= 0) == BOX.contains(z)


@given(st.tuples(st.floats(0.01, 4.99), st.floats(0.01, 9.99), st.floats(0.01, 99.99)))
def test_interior_equals_face_distance(z):
    d = min(min(v - lo, hi - v) for v, lo, hi in zip(z, BOX.lo, BOX.hi))
    assert signed_distance(BOX, z) == pytest.approx(-d)


def test_terminal_field_brute_force():
    spec = GridSpec((0, 0, 0), (50, 20, 100), (20, 20, 20))
    target = BoxSet((0, 0, 0), (15, 10, 100))
    f = terminal_field(spec, target, DOMAIN, time_label=30)
    assert f.time_label == 30
    X, K, E = spec.mesh()
    for k in range(0, 20, 3):
        for j in range(0, 20, 2):
            for i in range(20):
                z = (X[k, j, i], K[k, j, i], E[k, j, i])
                want = max(signed_distance(target, z), signed_distance(DOMAIN, z))
                assert f.storage[k, j, i] == want
                assert (want <= 0) == target.contains(z)


def test_terminal_field_cases():
    spec = GridSpec((0, 0, 0), (50, 20, 100), (11, 11, 11))
    target = BoxSet((0, 0, 0), (15, 10, 100))
    f = terminal_field(spec, target, DOMAIN)
    # (10, 4, 50): both negative, result is the less negative one
    assert f.at((2, 2, 5)) == max(-4.0, -10.0)
    # (40, 4, 50): outside the target
    assert f.at((8, 2, 5)) == pytest.approx(25.0)


def test_terminal_field_requires_subset():
    spec = GridSpec((0, 0, 0), (1, 1, 1), (3, 3, 3))
    with pytest.raises(ValueError):
        terminal_field(spec, BoxSet((0, 0, 0), (2, 1, 1)), BoxSet((0, 0, 0), (1, 1, 1)))


def test_distance_field_matches_pointwise():
    spec = GridSpec((-1, -1, -1), (6, 11, 101), (7, 5, 9))
    f = distance_field(spec, BOX)
    X, K, E = spec.mesh()
    want = [signed_distance(BOX, z) for z in zip(X.ravel(), K.ravel(), E.ravel())]
    np.testing.assert_array_equal(f.values, want)
