#!/usr/bin/env python3
"""
Deformation Lab
===============
Moves that lower L(P)^2 / A(P,-P) for every polygon that is not a regular
polygon with an odd number of sides:

    Case 1  some vertex v1 has -N(v1) inside N(v2) for another vertex v2:
            cut the corner at v1 along one of its edges (A(P,-P) stays,
            L drops)
    Case 2  a side normal u0 with -u0 in N(v) that does not bisect N(v):
            slide v along the support line parallel to that side
    Case 3  otherwise P is equiangular with an odd number of sides; moving
            one side line changes L and A(P,-P) linearly, and some side
            has a nonzero derivative of A/L^2 unless P is regular

N(v) is the normal cone at vertex v (spanned by the outward normals of the
two sides meeting there).
"""

import math
import logging
from dataclasses import dataclass

import numpy as np

from errors import DomainError, InvariantViolation, NotApplicable
from polygon_geometry import (
    ConvexPolygon, d_tr, edge_fan, mixed_area_minkowski, perimeter, reflect, regular_polygon,
)

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)
REL_TOL = 1e-9
CONE_TOL = 1e-12
CASE2_START = 1e-3
MAX_HALVINGS = 40


def kappa(k):
    """dL/dt when one side line of an equiangular k-gon moves outward by t"""
    a = 2 * math.pi / k
    return 2 * (1 - math.cos(a)) / math.sin(a)


def varrho(k):
    a = 2 * math.pi / k
    return math.sin(math.pi / k) / math.sin(a)


def _edge_dirs(normals):
    return np.column_stack([-normals[:, 1], normals[:, 0]])


@dataclass(frozen=True)
class EquiangularPolygon:
    """Side lengths e_0..e_{k-1} with outward normals at rotation + 2 pi i / k (CCW)"""
    sides: tuple
    rotation: float = 0.0

    def __post_init__(self):
        sides = tuple(float(e) for e in self.sides)
        if len(sides) < 3:
            raise DomainError(f"equiangular polygon needs k >= 3 sides, got {len(sides)}")
        if min(sides) <= 0:
            raise DomainError("side lengths must be positive")
        object.__setattr__(self, 'sides', sides)
        residual = np.linalg.norm(np.asarray(sides) @ _edge_dirs(self.normals))
        if residual > REL_TOL * sum(sides):
            raise DomainError(f"edge vectors do not close (residual {residual:.3g})")

    @property
    def k(self):
        return len(self.sides)

    @property
    def normals(self):
        angles = self.rotation + np.arange(len(self.sides)) * (2 * math.pi / len(self.sides))
        return np.column_stack([np.cos(angles), np.sin(angles)])

    def to_polygon(self, origin=(0.0, 0.0)):
        steps = np.asarray(self.sides)[:, None] * _edge_dirs(self.normals)
        vertices = np.asarray(origin, dtype=float) + np.vstack([np.zeros(2), np.cumsum(steps, axis=0)[:-1]])
        return ConvexPolygon(vertices)

    def is_regular(self, tol=REL_TOL):
        return max(self.sides) - min(self.sides) <= tol * max(self.sides)

    def opposite_pair(self, i):
        """Indices (j, j+1) of the sides whose normals bracket -u_i"""
        k = self.k
        if k % 2 == 0:
            raise DomainError("opposite side pair needs an odd number of sides")
        j = (i + (k - 1) // 2) % k
        return j, (j + 1) % k

    @classmethod
    def from_polygon(cls, P, tol=1e-9):
        """Recover the equiangular description of P; DomainError if not equiangular"""
        fan = edge_fan(P)
        k = len(fan)
        angles = np.arctan2(fan.normals[:, 1], fan.normals[:, 0])
        turns = np.mod(np.diff(np.append(angles, angles[0])), 2 * math.pi)
        if np.max(np.abs(turns - 2 * math.pi / k)) > tol:
            raise DomainError("polygon is not equiangular")
        return cls(tuple(fan.lengths), float(angles[0]))


def _closure_projector(k, rotation):
    dirs = _edge_dirs(EquiangularPolygon((1.0,) * k, rotation).normals).T
    return np.eye(k) - dirs.T @ np.linalg.solve(dirs @ dirs.T, dirs)


def project_sides(sides, rotation=0.0):
    """Nearest side lengths (least squares) whose edge vectors close up"""
    sides = np.asarray(sides, dtype=float)
    if len(sides) < 3:
        raise DomainError(f"k must be >= 3, got {len(sides)}")
    return EquiangularPolygon(tuple(_closure_projector(len(sides), rotation) @ sides), rotation)


def random_equiangular(k, rng, spread=0.3, attempts=100):
    """Positive side lengths projected onto the closure constraint"""
    if k < 3:
        raise DomainError(f"k must be >= 3, got {k}")
    rotation = rng.uniform(0.0, 2 * math.pi)
    projector = _closure_projector(k, rotation)
    for _ in range(attempts):
        sides = projector @ (1.0 + spread * rng.uniform(-1.0, 1.0, size=k))
        if sides.min() > 0.1:
            return EquiangularPolygon(tuple(sides), rotation)
    raise DomainError(f"could not sample a positive equiangular {k}-gon with spread {spread}")


def _line_vertices(normals, offsets):
    """Vertex i is the meet of side lines i-1 and i"""
    k = len(normals)
    out = []
    for i in range(k):
        A = np.array([normals[i - 1], normals[i]])
        out.append(np.linalg.solve(A, [offsets[i - 1], offsets[i]]))
    return np.array(out)


def closed_form_delta(P, i, t):
    """Predicted (delta L, delta A(P,-P)) for moving side line i by t"""
    j, jj = P.opposite_pair(i)
    return kappa(P.k) * t, (P.sides[j] + P.sides[jj]) * varrho(P.k) * t


def perturb_side(P, i, t, check=True):
    """P_{i,t}: side line i shifted by t along its outward normal"""
    k = P.k
    if not 0 <= i < k:
        raise DomainError(f"side index {i} out of range for k = {k}")
    base = P.to_polygon()
    normals = P.normals
    offsets = np.array([normals[j] @ base.vertices[j] for j in range(k)])
    offsets[i] += t
    vertices = _line_vertices(normals, offsets)
    dirs = _edge_dirs(normals)
    lengths = np.array([(vertices[(j + 1) % k] - vertices[j]) @ dirs[j] for j in range(k)])
    if lengths.min() <= 0:
        raise DomainError(f"moving side {i} by {t} destroys convexity")
    moved = ConvexPolygon(vertices)
    if check and k % 2 == 1 and k >= 5:
        dL, dA = closed_form_delta(P, i, t)
        L0 = perimeter(base)
        A0 = mixed_area_minkowski(base, reflect(base))
        L1 = perimeter(moved)
        A1 = mixed_area_minkowski(moved, reflect(moved))
        if abs(L1 - L0 - dL) > REL_TOL * max(1.0, L0) or abs(A1 - A0 - dA) > REL_TOL * max(1.0, A0):
            raise InvariantViolation(
                f"closed forms disagree: dL {L1 - L0:.12g} vs {dL:.12g}, dA {A1 - A0:.12g} vs {dA:.12g}")
    return moved


def ratio_derivative(P, i):
    """d/dt A(P_{i,t},-P_{i,t}) / L(P_{i,t})^2 at t = 0.

    The perimeter rate is kappa; it enters the quotient rule as 2*kappa*A.
    """
    j, jj = P.opposite_pair(i)
    poly = P.to_polygon()
    L = perimeter(poly)
    A = mixed_area_minkowski(poly, reflect(poly))
    return ((P.sides[j] + P.sides[jj]) * varrho(P.k) * L - 2 * kappa(P.k) * A) / L ** 3


def _ratio(poly):
    return perimeter(poly) ** 2 / mixed_area_minkowski(poly, reflect(poly))


# Normal cones

def _cones(P):
    """For vertex i: (normal of the side ending at v_i, normal of the side starting at v_i)"""
    normals = edge_fan(P).normals
    return [(normals[i - 1], normals[i]) for i in range(len(normals))]


def _in_cone(x, cone, tol=CONE_TOL):
    p, q = cone
    return (p[0] * x[1] - p[1] * x[0]) >= -tol and (x[0] * q[1] - x[1] * q[0]) >= -tol


def find_case1(P):
    """(v1, v2) vertex indices with -N(v1) inside N(v2), or None"""
    cones = _cones(P)
    for a, (p, q) in enumerate(cones):
        for b, cone in enumerate(cones):
            if a != b and _in_cone(-p, cone) and _in_cone(-q, cone):
                return a, b
    return None


def _same_mixed_area(P, Q):
    A0 = mixed_area_minkowski(P, reflect(P))
    A1 = mixed_area_minkowski(Q, reflect(Q))
    return abs(A1 - A0) <= REL_TOL * max(1.0, A0)


def case1_move(P, v1=None):
    """Cut the corner at v1 towards a neighbour; A(P,-P) is unchanged and L drops"""
    if v1 is None:
        found = find_case1(P)
        if found is None:
            raise NotApplicable("no vertex pair with -N(v1) inside N(v2)")
        v1 = found[0]
    else:
        cones = _cones(P)
        p, q = cones[v1]
        if not any(b != v1 and _in_cone(-p, c) and _in_cone(-q, c) for b, c in enumerate(cones)):
            raise NotApplicable(f"vertex {v1} has no partner vertex for a corner cut")
    V = P.vertices
    n = len(V)
    L0 = perimeter(P)
    for toward in ((v1 + 1) % n, (v1 - 1) % n):
        lam = 0.5
        for _ in range(MAX_HALVINGS):
            moved = V.copy()
            moved[v1] = V[v1] + lam * (V[toward] - V[v1])
            try:
                Q = ConvexPolygon(moved)
            except DomainError:
                lam /= 2
                continue
            if Q.n == n and perimeter(Q) < L0 and _same_mixed_area(P, Q):
                logger.debug(f"Case 1: vertex {v1} moved {lam:.3g} of the way to vertex {toward}")
                return Q
            lam /= 2
    raise NotApplicable(f"no corner cut at vertex {v1} preserves A(P,-P)")


def find_case2(P):
    """All (vertex, side) pairs with -u0 in N(v) not bisecting it"""
    fan = edge_fan(P)
    cones = _cones(P)
    out = []
    for v, (p, q) in enumerate(cones):
        for s, u0 in enumerate(fan.normals):
            x = -u0
            if not _in_cone(x, (p, q)):
                continue
            left = math.atan2(p[0] * x[1] - p[1] * x[0], p @ x)
            right = math.atan2(x[0] * q[1] - x[1] * q[0], x @ q)
            if abs(left - right) > 1e-9:
                out.append((v, s))
    return out


def case2_move(P, v=None):
    """Slide a vertex along the support line parallel to the opposite side"""
    if find_case1(P) is not None:
        raise NotApplicable("Case 1 applies; use case1_move")
    candidates = [c for c in find_case2(P) if v is None or c[0] == v]
    if not candidates:
        raise NotApplicable("no vertex / side pair with an off-centre opposite normal")
    fan = edge_fan(P)
    V = P.vertices
    L0 = perimeter(P)
    for vertex, side in candidates:
        direction = V[(side + 1) % len(V)] - V[side]
        direction = direction / np.linalg.norm(direction)
        for sign in (1.0, -1.0):
            step = CASE2_START * L0
            for _ in range(MAX_HALVINGS):
                moved = V.copy()
                moved[vertex] = V[vertex] + sign * step * direction
                try:
                    Q = ConvexPolygon(moved)
                except DomainError:
                    step /= 2
                    continue
                if Q.n == len(V) and perimeter(Q) < L0 and _same_mixed_area(P, Q):
                    logger.debug(f"Case 2: vertex {vertex} slid {sign * step:.3g} along side {side}")
                    return Q
                step /= 2
    raise NotApplicable("no admissible slide found")


def descent_move(P, step=1e-3):
    """Find a move lowering L^2 / A(P,-P); NotApplicable for regular odd polygons"""
    before = _ratio(P)
    for case, move in ((1, case1_move), (2, case2_move)):
        try:
            Q = move(P)
        except NotApplicable:
            continue
        return {'case': case, 'polygon': Q, 'ratio_before': before, 'ratio_after': _ratio(Q)}

    try:
        E = EquiangularPolygon.from_polygon(P)
    except DomainError:
        raise NotApplicable("polygon is neither in Case 1/2 nor equiangular")
    if E.k % 2 == 0 or E.is_regular():
        raise NotApplicable("regular polygon with an odd number of sides admits no descent")
    derivs = [ratio_derivative(E, i) for i in range(E.k)]
    i = int(np.argmax(np.abs(derivs)))
    t = math.copysign(step * perimeter(P), derivs[i])
    for _ in range(MAX_HALVINGS):
        try:
            Q = perturb_side(E, i, t, check=False)
        except DomainError:
            t /= 2
            continue
        after = _ratio(Q)
        if after < before:
            return {'case': 3, 'polygon': Q, 'ratio_before': before, 'ratio_after': after,
                    'side': i, 't': t, 'derivative': derivs[i]}
        t /= 2
    raise NotApplicable("side moves did not lower the ratio")


def regular_polygon_stats(k, tol=1e-6):
    """L^2 / A(P,-P), d_tr and its lower bounds for the regular odd k-gon"""
    if k < 5 or k % 2 == 0:
        raise DomainError(f"k must be odd and >= 5, got {k}")
    P = regular_polygon(k, 1.0)
    ratio = _ratio(P)
    expected = 4 * k * math.sin(math.pi / k)
    pentagon = 20 * math.sin(math.pi / 5)
    rho, _ = d_tr(P, tol)
    stats = {
        'k': k,
        'ratio': ratio,
        'ratio_closed_form': expected,
        'ratio_pentagon': pentagon,
        'ratio_over_bw': ratio / (6 * SQRT3),
        'd_tr': rho,
        'd_tr_bound_k': math.sqrt(2 * math.cos(math.pi / k)) - 1,
        'd_tr_bound_pentagon': math.sqrt(2 * math.cos(math.pi / 5)) - 1,
    }
    if abs(ratio - expected) > REL_TOL * expected:
        raise InvariantViolation(f"L^2/A = {ratio:.12g}, closed form {expected:.12g}")
    if ratio < pentagon * (1 - REL_TOL):
        raise InvariantViolation(f"L^2/A = {ratio:.12g} below 20 sin(pi/5)")
    if rho < 0.25:
        raise InvariantViolation(f"d_tr estimate {rho:.6g} below 0.25")
    return stats
