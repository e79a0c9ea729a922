#!/usr/bin/env python3
"""
Deformation Lab Tests
=====================
Side moves of equiangular polygons, the corner-cut and slide moves, and the
regular odd polygons.

Usage:
    pytest test_deformation_lab.py
"""

import math

import numpy as np
import pytest

from deformation_lab import (
    EquiangularPolygon, case1_move, case2_move, closed_form_delta, descent_move, find_case1,
    kappa, perturb_side, project_sides, random_equiangular, ratio_derivative,
    regular_polygon_stats, varrho,
)
from errors import DomainError, NotApplicable
from polygon_geometry import (
    ConvexPolygon, bw_deficit, mixed_area_minkowski, perimeter, reflect, regular_polygon,
    regular_triangle,
)

PENTAGON = EquiangularPolygon((1.0,) * 5)


def _mixed(P):
    return mixed_area_minkowski(P, reflect(P))


def _ratio(P):
    return _mixed(P) / perimeter(P) ** 2


def test_constants():
    assert kappa(5) == pytest.approx(1.45309, abs=1e-5)
    assert varrho(5) == pytest.approx(0.61803, abs=1e-5)


def test_pentagon_construction():
    P = PENTAGON.to_polygon()
    assert P.n == 5
    assert perimeter(P) == pytest.approx(5.0)
    assert PENTAGON.is_regular()
    E = EquiangularPolygon.from_polygon(regular_polygon(5, 1.0, rotation=0.3))
    assert E.k == 5 and E.is_regular()


def test_invalid_equiangular_polygons():
    with pytest.raises(DomainError):
        EquiangularPolygon((1.0, 1.0, 1.0, 1.0, 2.0))
    with pytest.raises(DomainError):
        EquiangularPolygon((1.0, 1.0))
    with pytest.raises(DomainError):
        EquiangularPolygon.from_polygon(ConvexPolygon([(0, 0), (3, 0), (3, 1), (0, 2)]))


def test_zero_move_is_identity():
    P = perturb_side(PENTAGON, 0, 0.0)
    assert np.allclose(P.vertices, PENTAGON.to_polygon().vertices)


def test_side_move_closed_forms_on_pentagon():
    t = 1e-3
    base = PENTAGON.to_polygon()
    moved = perturb_side(PENTAGON, 1, t)
    dL, dA = closed_form_delta(PENTAGON, 1, t)
    assert abs(perimeter(moved) - perimeter(base) - dL) <= 1e-9
    assert abs(_mixed(moved) - _mixed(base) - dA) <= 1e-9
    assert dL == pytest.approx(kappa(5) * t)
    assert dA == pytest.approx(2 * varrho(5) * t)


def test_side_move_closed_forms_on_random_polygons():
    rng = np.random.default_rng(40)
    for k in (5, 7, 9):
        for _ in range(20):
            P = random_equiangular(k, rng)
            i = int(rng.integers(k))
            t = rng.uniform(-0.01, 0.01)
            base = P.to_polygon()
            moved = perturb_side(P, i, t)
            dL, dA = closed_form_delta(P, i, t)
            assert abs(perimeter(moved) - perimeter(base) - dL) <= 1e-9
            assert abs(_mixed(moved) - _mixed(base) - dA) <= 1e-9


def test_side_move_losing_convexity():
    with pytest.raises(DomainError):
        perturb_side(PENTAGON, 0, 2.0)
    with pytest.raises(DomainError):
        perturb_side(PENTAGON, 0, -2.0)
    with pytest.raises(DomainError):
        perturb_side(PENTAGON, 5, 0.1)


@pytest.mark.parametrize('k', [5, 7, 9, 11])
def test_ratio_derivative_vanishes_for_regular(k):
    P = EquiangularPolygon((1.0,) * k, 0.2)
    for i in range(k):
        assert abs(ratio_derivative(P, i)) <= 1e-9


def test_ratio_derivative_nonzero_off_regular():
    delta = 1e-2
    P = project_sides((1.0, 1.0, 1.0, 1.0 + delta, 1.0 - delta))
    assert not P.is_regular()
    assert max(abs(ratio_derivative(P, i)) for i in range(5)) > 1e-6


def test_ratio_derivative_matches_finite_differences():
    rng = np.random.default_rng(41)
    h = 1e-6
    for _ in range(100):
        P = random_equiangular(5, rng)
        i = int(rng.integers(5))
        fd = (_ratio(perturb_side(P, i, h)) - _ratio(perturb_side(P, i, -h))) / (2 * h)
        d = ratio_derivative(P, i)
        assert abs(fd - d) <= max(1e-6 * abs(d), 1e-8)


def test_descent_exists_off_regular():
    rng = np.random.default_rng(42)
    for _ in range(100):
        P = random_equiangular(int(rng.choice([5, 7])), rng)
        move = descent_move(P.to_polygon())
        assert move['case'] == 3
        assert move['ratio_after'] < move['ratio_before']


def test_case1_on_pulled_in_square():
    P = ConvexPolygon([(0, 0), (1, 0), (0.9, 0.9), (0, 1)])
    assert find_case1(P) == (2, 0)
    Q = case1_move(P)
    assert abs(_mixed(Q) - _mixed(P)) <= 1e-9
    assert perimeter(Q) < perimeter(P)


def test_case1_not_applicable_for_triangle():
    with pytest.raises(NotApplicable):
        case1_move(regular_triangle(1.0))
    with pytest.raises(NotApplicable):
        case2_move(regular_triangle(1.0))


def test_case2_on_irregular_pentagon():
    V = regular_polygon(5, 5.0, rotation=math.pi / 2).vertices.copy()
    V[0] *= 1.05
    P = ConvexPolygon(V)
    assert find_case1(P) is None
    Q = case2_move(P)
    assert abs(_mixed(Q) - _mixed(P)) <= 1e-9
    assert perimeter(Q) < perimeter(P)
    move = descent_move(P)
    assert move['case'] == 2


def test_regular_odd_polygons_admit_no_descent():
    with pytest.raises(NotApplicable):
        descent_move(regular_polygon(5, 1.0))
    with pytest.raises(NotApplicable):
        descent_move(regular_triangle(1.0))


def test_regular_polygon_stats():
    s5 = regular_polygon_stats(5)
    assert s5['ratio'] == pytest.approx(20 * math.sin(math.pi / 5), rel=1e-9)
    assert s5['ratio'] == pytest.approx(11.75570, abs=1e-5)
    assert s5['ratio_over_bw'] > 1.1
    assert s5['d_tr_bound_pentagon'] == pytest.approx(0.27202, abs=1e-5)
    assert s5['d_tr'] >= s5['d_tr_bound_pentagon'] - 1e-6
    s7 = regular_polygon_stats(7)
    assert s7['ratio'] == pytest.approx(28 * math.sin(math.pi / 7), rel=1e-9)
    assert s7['ratio'] == pytest.approx(12.14874, abs=1e-5)
    assert s7['ratio'] > s5['ratio']
    for k in (4, 3, 6):
        with pytest.raises(DomainError):
            regular_polygon_stats(k)


@pytest.mark.parametrize('k', [5, 7, 9])
def test_regular_odd_deficit_positive(k):
    assert bw_deficit(regular_polygon(k, 1.0)) > 0
