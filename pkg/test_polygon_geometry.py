#!/usr/bin/env python3
"""
Polygon Geometry Tests
======================
The three mixed-area routines against each other, the classical identities,
and the d_tr estimate.

Usage:
    pytest test_polygon_geometry.py
"""

import math

import numpy as np
import pytest

from errors import DomainError, RetryWithPerturbedW
from polygon_geometry import (
    ConvexPolygon, area, betke_reference, bump_hexagon, bw_deficit, bw_pair_check, convex_hull,
    d_tr, edge_fan, minkowski_sum, mixed_area_betke, mixed_area_minkowski, mixed_area_oracle,
    mixed_area_segment, perimeter, random_convex_polygon, reflect, regular_polygon,
    regular_triangle, support, support_set, transform, translate, triangle_containment_gap, width,
)

SQUARE = ConvexPolygon([(0, 0), (1, 0), (1, 1), (0, 1)])
SQRT3 = math.sqrt(3.0)


def _close(a, b, rel=1e-9):
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


def test_clockwise_input_is_reversed():
    P = ConvexPolygon([(0, 0), (0, 1), (1, 1), (1, 0)])
    assert area(P) == pytest.approx(1.0)
    assert P.n == 4


def test_duplicate_and_collinear_vertices_merged():
    P = ConvexPolygon([(0, 0), (0.5, 0), (1, 0), (1, 0), (1, 1), (0, 1)])
    assert P.n == 4


@pytest.mark.parametrize('pts', [
    [(0, 0), (2, 0), (1, 0.2), (2, 2), (0, 2)],
    [(0, 0), (1, 0), (2, 0)],
    [(0, 0), (1, 1)],
    [(0, 0), (1, 0), (float('nan'), 1)],
])
def test_invalid_polygons_rejected(pts):
    with pytest.raises(DomainError):
        ConvexPolygon(pts)


def test_basic_measures():
    assert perimeter(SQUARE) == pytest.approx(4.0)
    assert support(SQUARE, (1, 1)) == pytest.approx(2.0)
    assert width(SQUARE, (1, 0)) == pytest.approx(1.0)
    assert len(support_set(SQUARE, (1, 0))) == 2
    assert len(support_set(SQUARE, (1, 1))) == 1
    fan = edge_fan(SQUARE)
    assert np.allclose(np.sum(fan.normals * fan.lengths[:, None], axis=0), 0.0)
    with pytest.raises(DomainError):
        support(SQUARE, (0, 0))


def test_minkowski_sum_of_squares():
    S = minkowski_sum(SQUARE, SQUARE)
    assert S.n == 4
    assert area(S) == pytest.approx(4.0)


def test_convex_hull_drops_interior_points():
    hull = convex_hull([(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5), (0.2, 0.7)])
    assert hull.n == 4
    assert area(hull) == pytest.approx(1.0)


def test_unit_squares_all_methods():
    for fn in (mixed_area_minkowski, mixed_area_betke, mixed_area_oracle):
        assert _close(fn(SQUARE, SQUARE), 1.0)


def test_formula_agreement_on_random_pairs():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        P = random_convex_polygon(rng, int(rng.integers(3, 13)))
        Q = random_convex_polygon(rng, int(rng.integers(3, 13)))
        m = mixed_area_minkowski(P, Q)
        assert _close(m, mixed_area_betke(P, Q))
        assert _close(m, mixed_area_oracle(P, Q))


def test_mixed_area_properties():
    rng = np.random.default_rng(8)
    for _ in range(50):
        P = random_convex_polygon(rng, 6)
        Q = random_convex_polygon(rng, 5)
        m = mixed_area_minkowski(P, Q)
        assert _close(m, mixed_area_minkowski(Q, P))
        assert _close(m, mixed_area_minkowski(translate(P, (3, -2)), Q))
        assert _close(2 * m, mixed_area_minkowski(transform(P, 2 * np.eye(2)), Q))
        assert _close(mixed_area_minkowski(P, P), area(P))


def test_unimodular_invariance():
    rng = np.random.default_rng(9)
    phi = np.array([[1.0, 0.7], [0.0, 1.0]])
    for _ in range(20):
        P = random_convex_polygon(rng, 7)
        Q = random_convex_polygon(rng, 4)
        assert _close(mixed_area_minkowski(P, Q),
                      mixed_area_minkowski(transform(P, phi), transform(Q, phi)))


def test_triangle_identity():
    rng = np.random.default_rng(10)
    for _ in range(100):
        T = random_convex_polygon(rng, 3)
        assert abs(mixed_area_minkowski(T, reflect(T)) - 2 * area(T)) <= 1e-12 * perimeter(T) ** 2


def test_linear_map_covariance():
    rng = np.random.default_rng(12)
    for _ in range(50):
        P = random_convex_polygon(rng, int(rng.integers(3, 10)))
        Q = random_convex_polygon(rng, int(rng.integers(3, 10)))
        phi = rng.uniform(-2.0, 2.0, size=(2, 2))
        det = abs(np.linalg.det(phi))
        if det < 1e-2:
            continue
        assert _close(mixed_area_minkowski(transform(P, phi), transform(Q, phi)),
                      det * mixed_area_minkowski(P, Q))


def test_monotone_under_inclusion():
    rng = np.random.default_rng(13)
    for _ in range(50):
        outer = random_convex_polygon(rng, 9)
        weights = rng.dirichlet(np.ones(outer.n), size=6)
        inner = convex_hull(weights @ outer.vertices)
        Q = random_convex_polygon(rng, 5)
        assert mixed_area_minkowski(inner, Q) <= mixed_area_minkowski(outer, Q) + 1e-9


def test_valuation_on_chord_split():
    rng = np.random.default_rng(14)
    for _ in range(50):
        P = random_convex_polygon(rng, int(rng.integers(4, 11)))
        Q = random_convex_polygon(rng, 6)
        V = P.vertices
        k = int(rng.integers(2, P.n - 1))
        left = ConvexPolygon(V[:k + 1])
        right = ConvexPolygon(np.vstack([V[k:], V[:1]]))
        chord = mixed_area_segment(V[0], V[k], Q)
        assert _close(mixed_area_minkowski(P, Q) + chord,
                      mixed_area_minkowski(left, Q) + mixed_area_minkowski(right, Q))


def test_inclusion_does_not_force_strict_increase():
    T = regular_triangle(1.0, rotation=0.4)
    H = convex_hull(np.vstack([T.vertices, -T.vertices]))
    assert H.n == 6
    assert area(H) > area(T)
    assert _close(mixed_area_minkowski(T, reflect(T)), mixed_area_minkowski(H, reflect(H)))
    assert _close(mixed_area_minkowski(H, reflect(H)), 2 * area(T))


def test_convex_hull_rejects_degenerate_points():
    with pytest.raises(DomainError):
        convex_hull([(0, 0), (1, 1), (2, 2), (3, 3)])
    with pytest.raises(DomainError):
        convex_hull([(0, 0), (1, 0)])


@pytest.mark.parametrize('k', [5, 7, 9, 11])
def test_regular_odd_polygon_reflection_area(k):
    P = regular_polygon(k, 1.0)
    expected = 1.0 / (4 * k * math.sin(math.pi / k))
    assert abs(mixed_area_minkowski(P, reflect(P)) - expected) <= 1e-9


def test_regular_triangle_is_extremal():
    T = regular_triangle(2.0)
    assert abs(bw_deficit(T)) <= 1e-12 * perimeter(T) ** 2
    assert bw_deficit(SQUARE) > 0


@pytest.mark.parametrize('eps', [1e-2, 1e-4])
def test_bump_hexagon_deficit(eps):
    H = bump_hexagon(eps)
    assert H.n == 6
    assert abs(bw_deficit(H) - 36 * eps) <= 1e-9 * 36 * eps


@pytest.mark.parametrize('eps', [1e-2, 1e-4])
def test_bump_hexagon_distance_from_triangles(eps):
    rho, _ = d_tr(bump_hexagon(eps))
    assert rho >= math.sqrt(eps)


def test_betke_rejects_forbidden_reference():
    with pytest.raises(RetryWithPerturbedW) as info:
        mixed_area_betke(SQUARE, SQUARE, w=(1.0, 0.0))
    w = info.value.suggested_w
    assert _close(mixed_area_betke(SQUARE, SQUARE, w=w), 1.0)
    assert np.allclose(betke_reference(SQUARE, SQUARE), w)


def test_betke_independent_of_reference():
    rng = np.random.default_rng(11)
    P = random_convex_polygon(rng, 8)
    Q = random_convex_polygon(rng, 6)
    values = []
    while len(values) < 20:
        a = rng.uniform(0.0, 2 * math.pi)
        try:
            values.append(mixed_area_betke(P, Q, w=(math.cos(a), math.sin(a))))
        except RetryWithPerturbedW:
            continue
    assert max(values) - min(values) <= 1e-9 * max(values)


def test_segment_mixed_area_matches_thin_rectangle():
    rng = np.random.default_rng(12)
    Q = random_convex_polygon(rng, 7)
    p, q = np.array([0.0, 0.0]), np.array([3.0, 4.0])
    d = 1e-9 * np.array([-4.0, 3.0]) / 5
    thin = ConvexPolygon([p, q, q + d, p + d])
    assert abs(mixed_area_segment(p, q, Q) - mixed_area_minkowski(thin, Q)) <= 1e-6
    assert mixed_area_segment(p, p, Q) == 0.0


def test_pair_inequality():
    rng = np.random.default_rng(13)
    for _ in range(200):
        ok, slack = bw_pair_check(random_convex_polygon(rng, 5), random_convex_polygon(rng, 9))
        assert ok and slack > 0


def test_dtr_of_regular_triangle_is_zero():
    T = regular_triangle(1.0, rotation=0.4)
    rho, witness = d_tr(T)
    assert rho <= 1e-5
    assert triangle_containment_gap(T, witness, rho + 1e-5) <= 1e-6


def test_dtr_witness_is_valid():
    rng = np.random.default_rng(14)
    for _ in range(5):
        P = random_convex_polygon(rng, 7)
        rho, witness = d_tr(P)
        assert rho > 0
        assert triangle_containment_gap(P, witness, rho) <= 1e-6 * P.scale()


def test_dtr_is_scale_invariant():
    P = regular_polygon(5, 1.0)
    r1, _ = d_tr(P)
    r2, _ = d_tr(transform(P, 7 * np.eye(2)))
    assert abs(r1 - r2) <= 1e-5
    with pytest.raises(DomainError):
        d_tr(P, tol=0)
