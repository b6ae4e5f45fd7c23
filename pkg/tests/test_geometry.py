import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qhx.core.errors import ConfigError, DomainError
from qhx.geometry.domains import (
    IteratedLogCusp,
    Polyline,
    PowerCusp,
    UnitDisk,
    boundary_length,
    boundary_param,
    boundary_point,
    contains,
    contains_many,
    dist_to_boundary,
    nearest_boundary,
    parse_domain,
    reference_point,
    wall_height,
)
from qhx.geometry.partition import area_exponent, count_area, cusp_pieces, epsilon, level, wall_inverse


@given(
    r=st.floats(min_value=0.0, max_value=0.999),
    t=st.floats(min_value=0.0, max_value=2 * math.pi),
)
def test_disk_distance_is_one_minus_radius(r, t):
    p = (r * math.cos(t), r * math.sin(t))
    assert dist_to_boundary(UnitDisk(), p) == pytest.approx(1.0 - r, abs=1e-12)


def test_exterior_point_is_rejected(disk):
    with pytest.raises(DomainError):
        dist_to_boundary(disk, (1.5, 0.0))


def test_disk_boundary_param_is_equally_spaced(disk):
    samples = boundary_param(disk, 16)
    arcs = np.array([a for a, _ in samples])
    np.testing.assert_allclose(np.diff(arcs), 2 * math.pi / 16)
    first = samples[0][1]
    assert (first.x, first.y) == pytest.approx((1.0, 0.0))


@pytest.mark.parametrize("n", [2, 3, 15])
def test_boundary_param_needs_sixteen_points(disk, n):
    with pytest.raises(ConfigError):
        boundary_param(disk, n)
    assert len(boundary_param(disk, 16)) == 16


@pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
def test_graph_cusp_membership(s):
    d = PowerCusp(s=s, model="graph")
    x = 0.3
    g = x**s
    assert contains(d, (x, 1.01 * g))
    assert not contains(d, (x, 0.99 * g))
    assert not contains(d, (0.0, -0.01))
    assert contains(d, reference_point(d))


def test_model_cusp_contains_bulb_and_cusp(model_cusp):
    pts = np.array([[4.0, 0.0], [0.5, 0.0], [0.5, 0.3], [-0.1, 0.0], [8.0, 0.0]])
    np.testing.assert_array_equal(contains_many(model_cusp, pts), [True, True, False, False, False])


def test_cusp_wall_points_are_on_the_boundary(graph_cusp):
    xs = np.array([0.05, 0.2, 0.6])
    dist, frac = nearest_boundary(graph_cusp, np.column_stack([xs, wall_height(graph_cusp, xs)]))
    np.testing.assert_allclose(dist, 0.0, atol=1e-9)
    back = boundary_point(graph_cusp, frac)
    np.testing.assert_allclose(back[:, 0], xs, atol=1e-7)


def test_right_wall_fractions_increase_upward(graph_cusp):
    ys = np.array([0.1, 0.3, 0.6])
    xs = ys**2
    _, frac = nearest_boundary(graph_cusp, np.column_stack([xs, ys]))
    assert np.all(np.diff(frac) > 0)
    _, left = nearest_boundary(graph_cusp, np.column_stack([-xs, ys]))
    assert np.all(np.diff(left) < 0)
    assert np.all(left > frac.max())


def test_boundary_length_of_disk(disk):
    assert boundary_length(disk) == pytest.approx(2 * math.pi, rel=1e-12)


def test_parse_domain_round_trips_json():
    d = parse_domain('{"variant": "iterated_log_cusp", "s": 0.5, "sigma": [1.0]}')
    assert isinstance(d, IteratedLogCusp)
    assert d.sigma == (1.0,)


@pytest.mark.parametrize(
    "data",
    [
        {"variant": "power_cusp", "s": 1.5},
        {"variant": "polyline", "vertices": [[0, 0], [0, 1], [1, 0]]},
        {"variant": "polyline", "vertices": [[0, 0], [1, 1], [1, 0], [0, 1]]},
        {"variant": "annulus"},
    ],
)
def test_parse_domain_rejects_bad_specs(data):
    with pytest.raises(DomainError):
        parse_domain(data)


def test_polyline_square():
    square = Polyline(vertices=((0, 0), (2, 0), (2, 2), (0, 2)))
    assert dist_to_boundary(square, (0.5, 1.0)) == pytest.approx(0.5)
    assert boundary_length(square) == pytest.approx(8.0)


def test_levels_and_epsilons():
    np.testing.assert_allclose([epsilon(k) for k in range(2, 6)], [1 / 4, 1 / 9, 1 / 16, 1 / 25])
    assert level(0) == pytest.approx(math.pi**2 / 6)
    for k in range(1, 10):
        assert level(k - 1) - level(k) == pytest.approx(epsilon(k), rel=1e-12)


def test_wall_inverse_inverts_the_wall(loglog_cusp):
    for y in (0.05, 0.2, 0.4):
        x = wall_inverse(loglog_cusp, y)
        assert float(wall_height(loglog_cusp, x)) == pytest.approx(y, rel=1e-10)


def test_pieces_tile_the_levels(graph_cusp):
    part = cusp_pieces(graph_cusp, 6)
    assert [p.k for p in part.pieces] == [2, 3, 4, 5, 6]
    for lower, upper in zip(part.pieces[1:], part.pieces[:-1]):
        assert lower.y_high == upper.y_low
    piece = part.piece(4)
    assert piece.height == pytest.approx(1 / 16)
    centre = np.array([[0.0, 0.5 * (piece.y_low + piece.y_high)]])
    assert part.piece_index(centre)[0] == 4
    assert part.piece_index(np.array([[0.0, 1.2]]))[0] == 0


def test_pieces_need_a_graph_cusp(model_cusp):
    with pytest.raises(DomainError):
        cusp_pieces(model_cusp, 5)


@pytest.mark.parametrize("k", [2, 4, 6])
def test_counted_area_matches_exact_area(graph_cusp, k):
    piece = cusp_pieces(graph_cusp, 6).piece(k)
    assert count_area(piece, graph_cusp) == pytest.approx(piece.area, rel=0.02)


def test_area_exponent_of_the_half_cusp(graph_cusp):
    part = cusp_pieces(graph_cusp, 8)
    slope = area_exponent([p.k for p in part.pieces], [p.area for p in part.pieces])
    assert slope == pytest.approx(-4.0, rel=0.05)
