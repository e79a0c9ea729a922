#!/usr/bin/env python3
"""
Hexagon Construction
====================
Maximal inscribed triangle T of a convex polygon K, the width parameters
t_i, and the three hexagons built on them:

    H2  circumscribed, two sides parallel to each side of T
    H1  inscribed, T plus the points q_i where K touches H2
    H0  same as H1 with q_i moved to the perpendicular bisector (p_i)

and the deficit chain

    L(K)^2 - 6*sqrt(3)*A(K,-K) >= L(H1)^2 - 6*sqrt(3)*A(H2,-H2)
                               >= L(H0)^2 - 6*sqrt(3)*A(H2,-H2)

Indices follow the usual convention: side a_i is opposite v_i and {i,j,k}
is always a permutation of {0,1,2}.
"""

import math
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from errors import DomainError, InvariantViolation
from polygon_geometry import (
    ConvexPolygon, area, edge_fan, mixed_area_minkowski, perimeter, reflect,
    support, support_set, width,
)

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)
REL_TOL = 1e-9
TIE_TOL = 1e-12


def _others(i):
    return (i + 1) % 3, (i + 2) % 3


def _loop_length(pts):
    edges = np.roll(pts, -1, axis=0) - pts
    return float(np.sum(np.hypot(edges[:, 0], edges[:, 1])))


@dataclass(frozen=True)
class HexagonDecomposition:
    T: ConvexPolygon
    a: Tuple[float, float, float]
    h: Tuple[float, float, float]
    t: Tuple[float, float, float]
    q: Optional[np.ndarray]
    p: np.ndarray
    w: dict
    H0_vertices: np.ndarray
    H0: Optional[ConvexPolygon]
    H1: Optional[ConvexPolygon]
    H2: ConvexPolygon

    @property
    def h0_convex(self):
        return self.H0 is not None

    @property
    def v(self):
        return self.T.vertices

    def perimeter_h0(self):
        return _loop_length(self.H0_vertices)


def _triangle_data(T):
    if T.n != 3:
        raise DomainError(f"expected a triangle, got {T.n} vertices")
    v = T.vertices
    a = tuple(float(np.hypot(*(v[k] - v[j]))) for j, k in (_others(i) for i in range(3)))
    double_area = 2.0 * area(T)
    h = tuple(double_area / ai for ai in a)
    return v, a, h


def _side_normal(v, i):
    """Outward unit normal of side a_i (pointing away from v_i)"""
    j, k = _others(i)
    e = v[k] - v[j]
    n = np.array([e[1], -e[0]]) / math.hypot(e[0], e[1])
    if n @ (v[i] - v[j]) > 0:
        n = -n
    return n


def max_inscribed_triangle(K):
    """Largest-area triangle on K's vertices; ties go to the lexicographically first triple"""
    V = K.vertices
    n = len(V)
    best = 0.0
    areas = []
    for i in range(n - 2):
        j, k = np.triu_indices(n, 1)
        keep = j > i
        j, k = j[keep], k[keep]
        e1 = V[j] - V[i]
        e2 = V[k] - V[i]
        a = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        areas.append((i, j, k, a))
        best = max(best, float(a.max()))
    for i, j, k, a in areas:
        hits = np.flatnonzero(a >= best * (1 - TIE_TOL))
        if hits.size:
            m = hits[0]
            T = ConvexPolygon([V[i], V[j[m]], V[k[m]]])
            break
    _check_supporting_lines(K, T)
    logger.debug(f"max inscribed triangle: vertices {i}, {j[m]}, {k[m]}, area {best:.12g}")
    return T


def _check_supporting_lines(K, T):
    """The line through v_i parallel to a_i supports K"""
    v = T.vertices
    scale = max(1.0, K.scale())
    for i in range(3):
        n = _side_normal(v, i)
        gap = support(K, -n) - float(-n @ v[i])
        if gap > REL_TOL * scale:
            raise InvariantViolation(
                f"line through v{i + 1} parallel to a{i + 1} does not support K (gap {gap:.3g})")


def width_params(K, T):
    """t_i = width(K, normal of a_i) / h_i - 1"""
    v, _, h = _triangle_data(T)
    t = []
    for i in range(3):
        ti = width(K, _side_normal(v, i)) / h[i] - 1.0
        if ti > 1.0 + REL_TOL or ti < -REL_TOL:
            raise InvariantViolation(f"t{i + 1} = {ti:.12g} outside [0, 1]; T is not maximal in K")
        t.append(min(max(ti, 0.0), 1.0))
    return tuple(t)


def _outer_corners(v, t):
    """w[(i, j)] = v_i + t_j (v_k - v_j), the H2 corner on the side through v_i"""
    w = {}
    for i in range(3):
        for j in _others(i):
            k = 3 - i - j
            w[(i, j)] = v[i] + t[j] * (v[k] - v[j])
    return w


def _hexagon_order(v, mids):
    """[v1, m2, v3, m1, v2, m3] with m_i the point beyond side a_i"""
    return np.array([v[0], mids[1], v[2], mids[0], v[1], mids[2]])


def hexagons_from_triangle(T, t):
    """H0 vertices, H0 (None if not convex), H2, p and w built from T and t only"""
    if len(t) != 3 or any(ti < 0 for ti in t):
        raise DomainError(f"width parameters must be three non-negative numbers, got {t}")
    v, a, h = _triangle_data(T)
    w = _outer_corners(v, t)
    H2 = ConvexPolygon([w[(2, 1)], w[(2, 0)], w[(1, 0)], w[(1, 2)], w[(0, 2)], w[(0, 1)]])
    p = np.array([(v[j] + v[k]) / 2 + t[i] * h[i] * _side_normal(v, i)
                  for i, (j, k) in ((i, _others(i)) for i in range(3))])
    H0_vertices = _hexagon_order(v, p)
    try:
        H0 = ConvexPolygon(H0_vertices)
    except DomainError:
        logger.info("H0 is not convex; only its perimeter is used")
        H0 = None
    return H0_vertices, H0, H2, p, w


def build_hexagons(K, T, t):
    """Full decomposition of K; validates every relation of the construction"""
    v, a, h = _triangle_data(T)
    H0_vertices, H0, H2, p, w = hexagons_from_triangle(T, t)
    q = np.array([support_set(K, _side_normal(v, i)).mean(axis=0) for i in range(3)])
    H1 = ConvexPolygon(_hexagon_order(v, q))
    dec = HexagonDecomposition(T=T, a=a, h=h, t=tuple(t), q=q, p=p, w=w,
                               H0_vertices=H0_vertices, H0=H0, H1=H1, H2=H2)
    _validate(K, dec)
    return dec


def _contains(outer, inner, scale):
    """inner in outer, checked on the normals of outer"""
    fan = edge_fan(outer)
    gap = np.max(inner.vertices @ fan.normals.T, axis=0) - np.max(outer.vertices @ fan.normals.T, axis=0)
    return float(gap.max()) <= REL_TOL * scale


def _validate(K, dec):
    scale = max(1.0, K.scale())
    a, h, t = dec.a, dec.h, dec.t
    double_area = 2.0 * area(dec.T)
    for i in range(3):
        if abs(a[i] * h[i] - double_area) > REL_TOL * double_area:
            raise InvariantViolation(f"2A(T) != a{i + 1} h{i + 1}")
    if sum(t) >= 1.5:
        raise InvariantViolation(f"t1 + t2 + t3 = {sum(t):.12g} is not below 1.5")

    w = dec.w
    for i in range(3):
        j, k = _others(i)
        through_v = float(np.hypot(*(w[(i, j)] - w[(i, k)])))
        if abs(through_v - (t[j] + t[k]) * a[i]) > REL_TOL * scale:
            raise InvariantViolation(f"H2 side through v{i + 1} has length {through_v:.12g}")
        opposite = float(np.hypot(*(w[(j, i)] - w[(k, i)])))
        if abs(opposite - (1 - t[i]) * a[i]) > REL_TOL * scale:
            raise InvariantViolation(f"H2 side opposite v{i + 1} has length {opposite:.12g}")

    for name, outer, inner in (('T in H1', dec.H1, dec.T), ('H1 in K', K, dec.H1), ('K in H2', dec.H2, K)):
        if not _contains(outer, inner, scale):
            raise InvariantViolation(f"containment {name} fails")

    expected = (1.0 + sum(t)) * area(dec.T)
    if abs(area(dec.H1) - expected) > REL_TOL * max(1.0, expected):
        raise InvariantViolation(f"area(H1) = {area(dec.H1):.12g}, expected {expected:.12g}")


def chain_check(K):
    """The three deficits of the sandwich chain; raises if an inequality fails"""
    T = max_inscribed_triangle(K)
    t = width_params(K, T)
    dec = build_hexagons(K, T, t)
    a_h2 = mixed_area_minkowski(dec.H2, reflect(dec.H2))
    L_K = perimeter(K)
    d_K = L_K ** 2 - 6 * SQRT3 * mixed_area_minkowski(K, reflect(K))
    d_H1 = perimeter(dec.H1) ** 2 - 6 * SQRT3 * a_h2
    d_H0 = dec.perimeter_h0() ** 2 - 6 * SQRT3 * a_h2
    slack = REL_TOL * max(1.0, L_K ** 2)
    report = {
        'deficit_K': d_K,
        'deficit_H1_H2': d_H1,
        'deficit_H0_H2': d_H0,
        't': list(t),
        'h0_convex': dec.h0_convex,
    }
    if d_K < d_H1 - slack:
        raise InvariantViolation(f"chain fails: deficit(K) = {d_K:.12g} < {d_H1:.12g}")
    if d_H1 < d_H0 - slack:
        raise InvariantViolation(f"chain fails: L(H1) term {d_H1:.12g} < L(H0) term {d_H0:.12g}")
    return report


def side_sum_check(rho1, rho2, rho3, xi):
    """rho2 + rho3 >= rho1 + xi^2 / rho1 for a triangle with area >= xi * rho1"""
    if min(rho1, rho2, rho3) <= 0:
        raise DomainError("side lengths must be positive")
    if rho1 > rho2 + rho3 or rho2 > rho1 + rho3 or rho3 > rho1 + rho2:
        raise DomainError(f"({rho1}, {rho2}, {rho3}) violates the triangle inequality")
    if not 0 <= xi <= rho1:
        raise DomainError(f"xi = {xi} outside [0, rho1]")
    s = (rho1 + rho2 + rho3) / 2
    heron = max(s * (s - rho1) * (s - rho2) * (s - rho3), 0.0)
    if math.sqrt(heron) < xi * rho1 * (1 - REL_TOL):
        raise DomainError("triangle area is below xi * rho1")
    return rho2 + rho3 >= rho1 + xi * xi / rho1 - 1e-12


def inscribed_area_check(T0, T, a):
    """A(T) <= (a / b) A(T0) when T lies in the regular triangle T0 of side b and has a side <= a"""
    b = perimeter(T0) / 3
    if not b / 2 <= a <= b * (1 + REL_TOL):
        raise DomainError(f"a = {a} outside [b/2, b] for b = {b}")
    _, sides, _ = _triangle_data(T)
    if min(sides) > a * (1 + REL_TOL):
        raise DomainError(f"T has no side of length <= {a}")
    if not _contains(T0, T, max(1.0, b)):
        raise DomainError("T is not contained in T0")
    return area(T) <= (a / b) * area(T0) + REL_TOL


def triangle_from_sides(a1, a2, a3):
    """CCW triangle (v1, v2, v3) with |v2 v3| = a1, |v1 v3| = a2, |v1 v2| = a3; v2 at the origin"""
    if a1 <= 0 or a2 <= 0 or a3 <= 0 or a1 >= a2 + a3 or a2 >= a1 + a3 or a3 >= a1 + a2:
        raise DomainError(f"({a1}, {a2}, {a3}) are not the sides of a triangle")
    x = (a1 * a1 + a3 * a3 - a2 * a2) / (2 * a1)
    y = math.sqrt(a3 * a3 - x * x)
    return ConvexPolygon([(x, y), (0.0, 0.0), (a1, 0.0)])


def closed_form_quantities(a, t):
    """Heron-based L(H0), A(H2,-H2), area(H1) for sides a and parameters t"""
    a1, a2, a3 = a
    f2 = (a1 + a2 + a3) * (-a1 + a2 + a3) * (a1 - a2 + a3) * (a1 + a2 - a3)
    if f2 <= 0:
        raise DomainError(f"({a1}, {a2}, {a3}) are not the sides of a triangle")
    area_t = math.sqrt(f2) / 4
    h = [2 * area_t / ai for ai in a]
    L_H0 = sum(math.sqrt(ai * ai + 4 * ti * ti * hi * hi) for ai, ti, hi in zip(a, t, h))
    A_H2 = 2 * area_t * (1 + t[0] * t[1] + t[1] * t[2] + t[2] * t[0])
    return {
        'area_T': area_t,
        'h': h,
        'L_H0': L_H0,
        'A_H2': A_H2,
        'area_H1': (1 + sum(t)) * area_t,
        'deficit': L_H0 ** 2 - 6 * SQRT3 * A_H2,
    }


def decomposition_report(dec):
    return {
        'T': dec.T.to_json()['vertices'],
        'a': list(dec.a),
        'h': list(dec.h),
        't': list(dec.t),
        'p': dec.p.tolist(),
        'q': None if dec.q is None else dec.q.tolist(),
        'w': {f"w{i + 1}{j + 1}": pt.tolist() for (i, j), pt in sorted(dec.w.items())},
        'H0': dec.H0_vertices.tolist(),
        'h0_convex': dec.h0_convex,
        'H1': None if dec.H1 is None else dec.H1.to_json()['vertices'],
        'H2': dec.H2.to_json()['vertices'],
        'L_H0': dec.perimeter_h0(),
        'A_H2_H2': mixed_area_minkowski(dec.H2, reflect(dec.H2)),
    }
