import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnelearn.geometry import (Box, ShrunkBox, default_shrink_center,
                               project_box, project_nonneg, shrink)

BOX = Box([0.0, 0.0], [1.0, 1.0])


def test_box_validation():
    with pytest.raises(ValueError):
        Box([0.0, 2.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        Box([0.0], [np.inf])


def test_project_inside_unchanged():
    x = np.array([0.25, 0.75])
    assert np.array_equal(project_box(BOX, x), x)


def test_project_clamps():
    assert np.array_equal(project_box(BOX, [2.0, -1.0]), [1.0, 0.0])


def test_projection_optimality_bruteforce(rng):
    box = Box([-1.0, 0.5, -3.0], [2.0, 0.5, 0.0])
    for _ in range(20):
        x = rng.uniform(-5, 5, size=3)
        p = project_box(box, x)
        best = np.linalg.norm(x - p)
        for _ in range(100):
            y = box.sample(rng)
            assert best <= np.linalg.norm(x - y) + 1e-12


def test_project_nonneg():
    assert np.array_equal(project_nonneg([-1.0, 2.0]), [0.0, 2.0])
    x = np.array([0.5, 1.0])
    assert np.array_equal(project_nonneg(x), x)
    y = project_nonneg([-3.0, 0.2])
    assert np.array_equal(project_nonneg(y), y)


coords = st.floats(-10, 10, allow_nan=False)


@given(x=st.tuples(coords, coords), y=st.tuples(coords, coords))
@settings(max_examples=200)
def test_projection_nonexpansive(x, y):
    px, py = project_box(BOX, x), project_box(BOX, y)
    assert np.linalg.norm(px - py) <= np.linalg.norm(np.subtract(x, y)) + 1e-12


def test_nonexpansive_bulk(rng):
    box = Box([-2.0, 0.0, 1.0], [2.0, 0.5, 4.0])
    x = rng.uniform(-6, 6, size=(10_000, 3))
    y = rng.uniform(-6, 6, size=(10_000, 3))
    lhs = np.linalg.norm(project_box(box, x) - project_box(box, y), axis=1)
    rhs = np.linalg.norm(x - y, axis=1)
    assert np.all(lhs <= rhs + 1e-12)


def test_shrink_identity_and_scaling():
    b = Box([0.0], [1.0])
    s0 = shrink(b, 0.0, [0.0])
    assert np.array_equal(s0.lower, b.lower) and np.array_equal(s0.upper, b.upper)
    s = shrink(b, 0.1, [0.0])
    assert np.allclose([s.lower[0], s.upper[0]], [0.0, 0.9])
    sym = shrink(Box([-1.0], [1.0]), 0.5, [0.0])
    assert np.allclose([sym.lower[0], sym.upper[0]], [-0.5, 0.5])


def test_shrink_validation():
    b = Box([0.0], [1.0])
    with pytest.raises(ValueError):
        shrink(b, 1.0, [0.0])
    with pytest.raises(ValueError):
        shrink(b, -0.1, [0.0])
    with pytest.raises(ValueError):
        shrink(b, 0.5, [2.0])


def test_shrink_default_center():
    assert np.array_equal(default_shrink_center(Box([-1.0], [1.0])), [0.0])
    assert np.array_equal(default_shrink_center(Box([2.0], [4.0])), [3.0])


def test_shrink_distance_bound(rng):
    # ||x - Proj_shrunk(x)|| <= rho * max box width for any x in the box
    b = Box([-1.0, 0.0], [3.0, 0.5])
    for rho in (0.05, 0.3, 0.9):
        s = shrink(b, rho, b.center)
        for _ in range(200):
            x = b.sample(rng)
            assert np.linalg.norm(x - project_box(s, x)) <= rho * b.widths.max() + 1e-12


@given(r1=st.floats(0, 0.99), r2=st.floats(0, 0.99))
@settings(max_examples=100)
def test_shrink_nesting(r1, r2):
    r1, r2 = min(r1, r2), max(r1, r2)
    b = Box([-1.0, 2.0], [1.0, 5.0])
    big = shrink(b, r1, b.center)
    small = shrink(b, r2, b.center)
    assert np.all(small.lower >= big.lower - 1e-12)
    assert np.all(small.upper <= big.upper + 1e-12)


def test_shrunk_box_type():
    sb = ShrunkBox(base=Box([0.0, 0.0], [2.0, 2.0]), rho=0.25, center=np.zeros(2))
    assert np.allclose(sb.box.upper, [1.5, 1.5])
    assert np.array_equal(sb.project([3.0, -1.0]), [1.5, 0.0])
    with pytest.raises(ValueError):
        ShrunkBox(base=Box([0.0], [1.0]), rho=1.2, center=np.zeros(1))
