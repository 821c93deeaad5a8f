import pytest
from hypothesis import given, strategies as st

from geodynis.geometry import (Box, ContractError, QueryBox, conflicting_pairs, contained_in,
                               intersects_open, is_independent, make_box, validate_box, vertices)


@pytest.mark.parametrize("a, b, expected", [
    (((0, 0), (1, 1)), ((1, 0), (2, 1)), False),
    (((0, 0), (2, 2)), ((1, 1), (3, 3)), True),
    (((0, 0), (2, 2)), ((0, 0), (2, 2)), True),
    (((0, 0), (2, 2)), ((2, 2), (3, 3)), False),
])
def test_intersects_open(a, b, expected):
    x, y = make_box(0, *a), make_box(1, *b)
    assert intersects_open(x, y) is expected
    assert intersects_open(y, x) is expected


def test_intersects_dimension_mismatch():
    with pytest.raises(ContractError):
        intersects_open(make_box(0, 0, 1), make_box(1, (0, 0), (1, 1)))


@pytest.mark.parametrize("c, q, expected", [
    (((1,), (3,)), ((1,), (3,)), True),
    (((0,), (3,)), ((1,), (2,)), False),
    (((1, 1), (2, 2)), ((0, 0), (4, 4)), True),
])
def test_contained_in_closed(c, q, expected):
    assert contained_in(make_box(0, *c), QueryBox(*q)) is expected


@pytest.mark.parametrize("box, count, expected", [
    (make_box(0, 2, 5), 2, {(2.0,), (5.0,)}),
    (make_box(0, (1, 2), (3, 4)), 4, {(1.0, 2.0), (1.0, 4.0), (3.0, 2.0), (3.0, 4.0)}),
    (make_box(0, (0, 0, 0), (1, 1, 1)), 8, None),
])
def test_vertices(box, count, expected):
    vs = vertices(box)
    assert len(set(vs)) == count
    if expected is not None:
        assert set(vs) == expected


@pytest.mark.parametrize("lo, hi, cube", [
    ((0,), (0.5,), False),      # edge below 1
    ((-1,), (2,), False),       # outside [0, N]
    ((0, 0), (2, 3), True),     # not a cube
])
def test_validate_rejects(lo, hi, cube):
    with pytest.raises(ContractError):
        validate_box(make_box(0, lo, hi), 16, cube=cube)


def test_weight_below_one_rejected():
    with pytest.raises(ContractError):
        validate_box(make_box(0, 0, 2, 0.5), 16)


def test_box_properties():
    b = make_box(3, (1, 2), (4, 5), 2.5)
    assert b.dim == 2 and b.size == 3.0 and b.is_cube
    assert isinstance(b, Box) and b.edges() == [3.0, 3.0]


coord = st.integers(0, 20)


@st.composite
def intervals(draw, n=st.integers(0, 10)):
    out = []
    for i in range(draw(n)):
        a = draw(coord)
        out.append(make_box(i, a, a + draw(st.integers(1, 6))))
    return out


@given(intervals())
def test_conflicting_pairs_matches_quadratic_scan(items):
    want = {(a.id, b.id) for i, a in enumerate(items) for b in items[i + 1:] if intersects_open(a, b)}
    got = {tuple(sorted(p)) for p in conflicting_pairs(items)}
    assert got == {tuple(sorted(p)) for p in want}
    assert is_independent(items) == (not want)
