#!/usr/bin/env python3
"""
Polygon Geometry
================
Convex polygons in the plane: support function, area, perimeter, Minkowski
sums and the three mixed-area routines (Minkowski's support formula, Betke's
determinant formula, and the Minkowski-sum oracle).

Also holds d_tr, the distance of a polygon from the regular triangles,
estimated by a grid-plus-golden-section search over the rotation angle with
a linear program for centre and scale at every angle. The estimate is
APPROXIMATE and is labelled so wherever it is reported.

Usage:
    P = ConvexPolygon([(0, 0), (2, 0), (0, 2)])
    mixed_area_minkowski(P, reflect(P))      # 4.0
    bw_deficit(bump_hexagon(0.01))           # 0.36
"""

import math
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from errors import ApproximationError, DomainError, InvariantViolation, RetryWithPerturbedW

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)
COLLINEAR_TOL = 1e-12
CLOSURE_TOL = 1e-10
BETKE_W_TOL = 1e-12
BETKE_W_MARGIN = 1e-6
BETKE_MAX_RETRIES = 32
# rotation step for default Betke reference vectors; an irrational multiple of pi
BETKE_W_STEP = math.pi * (math.sqrt(5.0) - 1.0) / 2.0

DTR_GRID = 64
DTR_MAX_REFINE = 200


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def signed_area(pts):
    nxt = np.roll(pts, -1, axis=0)
    return 0.5 * float(np.sum(_cross(pts, nxt)))


def _unit(u):
    u = np.asarray(u, dtype=float)
    if u.shape != (2,) or not np.all(np.isfinite(u)):
        raise DomainError(f"direction must be a finite 2-vector, got {u!r}")
    norm = math.hypot(u[0], u[1])
    if norm == 0.0:
        raise DomainError("zero direction")
    return u / norm


class ConvexPolygon:
    """Strictly convex polygon stored as a counterclockwise vertex array.

    Clockwise input is reversed. Consecutive duplicates and vertices whose
    turn is below COLLINEAR_TOL * scale**2 are merged away.
    """

    __slots__ = ('vertices',)

    def __init__(self, vertices):
        pts = np.array(vertices, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise DomainError(f"vertices must be a list of 2D points, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DomainError("vertex coordinates must be finite")
        if len(pts) < 3:
            raise DomainError(f"polygon needs at least 3 vertices, got {len(pts)}")
        scale = float(max(np.ptp(pts[:, 0]), np.ptp(pts[:, 1])))
        if scale == 0.0:
            raise DomainError("all vertices coincide")
        if signed_area(pts) < 0:
            pts = pts[::-1].copy()

        eps = COLLINEAR_TOL * scale * scale
        while len(pts) >= 3:
            prev = np.roll(pts, 1, axis=0)
            nxt = np.roll(pts, -1, axis=0)
            turn = _cross(pts - prev, nxt - pts)
            dup = np.hypot(*(pts - prev).T) <= COLLINEAR_TOL * scale
            bad = np.flatnonzero(dup | (np.abs(turn) <= eps))
            if bad.size == 0:
                break
            pts = np.delete(pts, bad[0], axis=0)
        if len(pts) < 3:
            raise DomainError("polygon is degenerate (all vertices collinear)")

        edges = np.roll(pts, -1, axis=0) - pts
        turn = _cross(edges, np.roll(edges, -1, axis=0))
        if np.any(turn <= 0):
            raise DomainError("polygon is not convex")
        angles = np.arctan2(turn, np.sum(edges * np.roll(edges, -1, axis=0), axis=1))
        if abs(float(np.sum(angles)) - 2 * math.pi) > 1e-6:
            raise DomainError("polygon winds more than once")
        pts.setflags(write=False)
        self.vertices = pts

    @property
    def n(self):
        return len(self.vertices)

    def __len__(self):
        return len(self.vertices)

    def centroid(self):
        """Vertex mean (used to centre computations, not the area centroid)"""
        return self.vertices.mean(axis=0)

    def scale(self):
        return float(max(np.ptp(self.vertices[:, 0]), np.ptp(self.vertices[:, 1])))

    def to_json(self):
        return {'vertices': [[float(x), float(y)] for x, y in self.vertices]}

    def __repr__(self):
        return f"ConvexPolygon(n={self.n}, area={area(self):.6g})"


@dataclass(frozen=True)
class EdgeFan:
    """Outward unit normals and side lengths of a polygon, CCW"""
    normals: np.ndarray
    lengths: np.ndarray
    starts: np.ndarray
    ends: np.ndarray

    def __len__(self):
        return len(self.lengths)


def edge_fan(P):
    starts = P.vertices
    ends = np.roll(starts, -1, axis=0)
    edges = ends - starts
    lengths = np.hypot(edges[:, 0], edges[:, 1])
    normals = np.column_stack([edges[:, 1], -edges[:, 0]]) / lengths[:, None]
    closure = np.abs(np.sum(normals * lengths[:, None], axis=0)).max()
    if closure > CLOSURE_TOL * float(lengths.sum()):
        raise InvariantViolation(f"edge fan does not close: residual {closure:.3g}")
    return EdgeFan(normals, lengths, starts, ends)


def support(P, u):
    u = np.asarray(u, dtype=float)
    if not np.any(u):
        raise DomainError("support function needs a nonzero direction")
    return float(np.max(P.vertices @ u))


def support_set(P, u, tol=1e-9):
    """Vertices attaining the support value in direction u (one or two points)"""
    u = _unit(u)
    values = P.vertices @ u
    h = float(values.max())
    return P.vertices[values >= h - tol * max(1.0, P.scale())]


def width(P, u):
    u = _unit(u)
    return support(P, u) + support(P, -u)


def area(P):
    return signed_area(P.vertices)


def perimeter(P):
    edges = np.roll(P.vertices, -1, axis=0) - P.vertices
    return float(np.sum(np.hypot(edges[:, 0], edges[:, 1])))


def reflect(P):
    """Point reflection -P; a half turn keeps the CCW order"""
    return ConvexPolygon(-P.vertices)


def translate(P, z):
    return ConvexPolygon(P.vertices + np.asarray(z, dtype=float))


def transform(P, phi):
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (2, 2):
        raise DomainError(f"linear map must be 2x2, got {phi.shape}")
    if abs(np.linalg.det(phi)) == 0.0:
        raise DomainError("linear map is singular")
    return ConvexPolygon(P.vertices @ phi.T)


def _lowest_first(pts):
    start = int(np.lexsort((pts[:, 0], pts[:, 1]))[0])
    return np.roll(pts, -start, axis=0)


def minkowski_sum(P, Q):
    """P + Q by merging the two edge sequences in angular order"""
    a = _lowest_first(P.vertices)
    b = _lowest_first(Q.vertices)
    ea = np.roll(a, -1, axis=0) - a
    eb = np.roll(b, -1, axis=0) - b
    out = [a[0] + b[0]]
    i = j = 0
    while i < len(ea) or j < len(eb):
        if j == len(eb):
            step = ea[i]
            i += 1
        elif i == len(ea):
            step = eb[j]
            j += 1
        else:
            turn = _cross(ea[i], eb[j])
            if turn > 0:
                step = ea[i]
                i += 1
            elif turn < 0:
                step = eb[j]
                j += 1
            else:
                step = ea[i] + eb[j]
                i += 1
                j += 1
        out.append(out[-1] + step)
    return ConvexPolygon(out[:-1])


def convex_hull(points):
    """Convex hull of a point set, returned as a ConvexPolygon"""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) < 3:
        raise DomainError("convex hull needs at least 3 distinct points")
    try:
        hull = ConvexHull(pts)
    except QhullError as e:
        raise DomainError(f"degenerate point set: {e}")
    return ConvexPolygon(pts[hull.vertices])


# Mixed areas

def mixed_area_minkowski(P, Q):
    """A(P, Q) = 1/2 * sum over normals u of P of h_Q(u) * S_P(u)"""
    fan = edge_fan(P)
    # translation invariant; centring Q keeps the support values small
    qv = Q.vertices - Q.centroid()
    h = np.max(fan.normals @ qv.T, axis=1)
    return 0.5 * float(np.sum(h * fan.lengths))


def _forbidden_normals(P, Q):
    return np.vstack([edge_fan(P).normals, -edge_fan(Q).normals])


def _angular_gap(w, normals):
    angles = np.abs(np.arctan2(_cross(normals, w), normals @ w))
    return float(angles.min())


def betke_reference(P, Q, margin=BETKE_W_MARGIN):
    """Deterministic admissible w: (1, 0) rotated by multiples of an irrational angle"""
    forbidden = _forbidden_normals(P, Q)
    for attempt in range(BETKE_MAX_RETRIES):
        theta = 0.5 + attempt * BETKE_W_STEP
        w = np.array([math.cos(theta), math.sin(theta)])
        if _angular_gap(w, forbidden) > margin:
            return w
        logger.debug(f"Betke reference attempt {attempt} too close to a normal, rotating")
    raise InvariantViolation(f"no admissible Betke reference vector after {BETKE_MAX_RETRIES} attempts")


def mixed_area_betke(P, Q, w=None):
    """2A(P,Q) = sum |det(u,v)| S_P(u) S_Q(v) over normal pairs with w in pos{u, -v}"""
    if w is None:
        w = betke_reference(P, Q)
    else:
        w = _unit(w)
        if _angular_gap(w, _forbidden_normals(P, Q)) <= BETKE_W_TOL:
            suggested = betke_reference(P, Q)
            raise RetryWithPerturbedW(
                f"reference vector {w.tolist()} coincides with a forbidden normal", suggested)
    fp, fq = edge_fan(P), edge_fan(Q)
    a = fp.normals[:, None, :]
    b = -fq.normals[None, :, :]
    det_ab = _cross(a, b)
    with np.errstate(divide='ignore', invalid='ignore'):
        alpha = _cross(w, b) / det_ab
        beta = _cross(a, w) / det_ab
    inside = (det_ab != 0.0) & (alpha > 0) & (beta > 0)
    weights = np.abs(det_ab) * fp.lengths[:, None] * fq.lengths[None, :]
    return 0.5 * float(np.sum(weights[inside]))


def mixed_area_oracle(P, Q):
    return 0.5 * (area(minkowski_sum(P, Q)) - area(P) - area(Q))


def mixed_area_segment(p, q, Q):
    """Mixed area of the segment [p, q] with Q: half its length times Q's width across it"""
    d = np.asarray(q, dtype=float) - np.asarray(p, dtype=float)
    length = math.hypot(d[0], d[1])
    if length == 0.0:
        return 0.0
    return 0.5 * length * width(Q, (d[1], -d[0]))


def bw_deficit(P):
    """L(P)^2 - 6*sqrt(3)*A(P, -P); nonnegative, zero exactly for regular triangles"""
    return perimeter(P) ** 2 - 6 * SQRT3 * mixed_area_minkowski(P, reflect(P))


def bw_pair_check(P, Q, rel_tol=1e-9):
    """L(P) L(Q) >= 8 A(P, Q); returns (ok, slack)"""
    lhs = perimeter(P) * perimeter(Q)
    rhs = 8 * mixed_area_minkowski(P, Q)
    slack = lhs - rhs
    return slack >= -rel_tol * max(1.0, lhs), slack


# Distance from regular triangles

def _triangle_dirs(theta):
    angles = theta + np.arange(3) * (2 * math.pi / 3)
    return np.column_stack([np.cos(angles), np.sin(angles)])


def _dtr_at_angle(K, normals, h, theta):
    """Smallest 1 + rho for triangles of rotation theta; (R, z, s) or None.

    With tau = 1/s and z' = z/s the containments z + s*d_k in K and
    h_K(n_j) <= <n_j, z> + R*s/2 become linear in (z', R, tau).
    """
    d = _triangle_dirs(theta)
    tri_normals = -d
    m = len(normals)
    rows, rhs = [], []
    for k in range(3):
        for i in range(m):
            rows.append([normals[i, 0], normals[i, 1], 0.0, -h[i]])
            rhs.append(-float(normals[i] @ d[k]))
    for j in range(3):
        hn = float(np.max(tri_normals[j] @ K.T))
        rows.append([-tri_normals[j, 0], -tri_normals[j, 1], -0.5, hn])
        rhs.append(0.0)
    res = linprog(c=[0.0, 0.0, 1.0, 0.0], A_ub=np.array(rows), b_ub=np.array(rhs),
                  bounds=[(None, None), (None, None), (0, None), (0, None)], method='highs')
    if not res.success or res.x[3] <= 0:
        return None
    zx, zy, R, tau = res.x
    s = 1.0 / tau
    return R, np.array([zx, zy]) * s, s


def d_tr(P, tol=1e-6, grid=DTR_GRID):
    """Approximate d_tr(P) and a witness regular triangle.

    Returns (rho, triangle). The triangle T (centroid z) satisfies
    T - z in P - z in (1 + rho)(T - z) up to the LP tolerance.
    """
    if tol <= 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    center = P.centroid()
    K = P.vertices - center
    fan = edge_fan(P)
    normals = fan.normals
    h = np.max(normals @ K.T, axis=1)

    period = 2 * math.pi / 3
    best = None
    cache = {}

    def evaluate(theta):
        theta = theta % period
        if theta not in cache:
            cache[theta] = _dtr_at_angle(K, normals, h, theta)
        out = cache[theta]
        return math.inf if out is None else out[0]

    thetas = np.arange(grid) * (period / grid)
    values = [evaluate(t) for t in thetas]
    k = int(np.argmin(values))
    if not math.isfinite(values[k]):
        raise ApproximationError("d_tr: every containment LP failed on the angle grid")

    # golden-section refinement on the bracket around the best grid angle
    step = period / grid
    a, b = thetas[k] - step, thetas[k] + step
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = evaluate(c), evaluate(d)
    for _ in range(DTR_MAX_REFINE):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = evaluate(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = evaluate(d)

    for theta in [thetas[k], c, d]:
        value = evaluate(theta)
        if best is None or value < best[0]:
            best = (value, theta % period)
    theta = best[1]
    out = cache[theta]
    if out is None:
        raise ApproximationError("d_tr: refinement lost the feasible triangle", best_rho=values[k] - 1)
    R, z, s = out
    rho = max(R - 1.0, 0.0)
    triangle = ConvexPolygon(z + center + s * _triangle_dirs(theta))
    logger.debug(f"d_tr estimate {rho:.6g} at theta={theta:.6g}, scale={s:.6g}")
    return rho, triangle


def triangle_containment_gap(P, triangle, rho):
    """Largest violation of triangle in P in (1 + rho)-scaled triangle (<= 0 means both hold)"""
    z = triangle.vertices.mean(axis=0)
    fan = edge_fan(P)
    inner = float(np.max(triangle.vertices @ fan.normals.T - np.max(P.vertices @ fan.normals.T, axis=0)))
    outer_tri = ConvexPolygon(z + (1 + rho) * (triangle.vertices - z))
    tfan = edge_fan(outer_tri)
    outer = float(np.max(np.max(P.vertices @ tfan.normals.T, axis=0) -
                         np.max(outer_tri.vertices @ tfan.normals.T, axis=0)))
    return max(inner, outer)


# Sample polygons

def regular_polygon(k, perimeter=1.0, center=(0.0, 0.0), rotation=0.0):
    if k < 3:
        raise DomainError(f"regular polygon needs k >= 3, got {k}")
    radius = perimeter / (2 * k * math.sin(math.pi / k))
    angles = rotation + np.arange(k) * (2 * math.pi / k)
    pts = np.column_stack([np.cos(angles), np.sin(angles)]) * radius + np.asarray(center, dtype=float)
    return ConvexPolygon(pts)


def regular_triangle(side=1.0, center=(0.0, 0.0), rotation=math.pi / 2):
    return regular_polygon(3, 3 * side, center, rotation)


def bump_hexagon(eps):
    """Regular triangle of edge 2 with an isosceles bump of height sqrt(eps) on each edge"""
    if eps < 0:
        raise DomainError(f"bump parameter must be >= 0, got {eps}")
    tri = np.array([[-1.0, -1.0 / SQRT3], [1.0, -1.0 / SQRT3], [0.0, 2.0 / SQRT3]])
    if eps == 0:
        return ConvexPolygon(tri)
    pts = []
    for i in range(3):
        a, b = tri[i], tri[(i + 1) % 3]
        e = b - a
        outward = np.array([e[1], -e[0]]) / np.hypot(*e)
        pts.append(a)
        pts.append((a + b) / 2 + math.sqrt(eps) * outward)
    return ConvexPolygon(pts)


def random_convex_polygon(rng, n, scale=10.0):
    """n points on a random ellipse, coordinates within [-scale, scale]"""
    if n < 3:
        raise DomainError(f"random polygon needs n >= 3, got {n}")
    angles = np.sort(rng.uniform(0.0, 2 * math.pi, size=n))
    circle = np.column_stack([np.cos(angles), np.sin(angles)])
    phi = rng.uniform(0.0, math.pi)
    rot = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
    shape = rot @ np.diag(rng.uniform(0.2, 1.0, size=2))
    radius = rng.uniform(0.1, 0.5) * scale
    center = rng.uniform(-scale / 2, scale / 2, size=2)
    return ConvexPolygon(circle @ shape.T * radius + center)
