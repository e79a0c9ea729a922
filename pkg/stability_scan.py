"""
Stability scan: d_tr(K) <= 400 sqrt(eps) on random near-regular triangles.

eps = L(K)^2 / (6 sqrt(3) A(K,-K)) - 1. The bound is claimed when
d_tr(K) <= 1/36 and eps <= (6*180)^-2; samples outside that range are
recorded but never count as violations.
"""

import math
import logging
from dataclasses import dataclass, asdict

import numpy as np

from errors import DomainError
from polygon_geometry import (
    convex_hull, d_tr, mixed_area_minkowski, perimeter, reflect, regular_triangle,
)

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)
DTR_LIMIT = 1.0 / 36.0
EPS_LIMIT = 1.0 / (6 * 180) ** 2
GLOBAL_EPS_LIMIT = 2.0 ** -28
BOUND_FACTOR = 400.0
# log10 range of the perturbation size relative to the side length
MAGNITUDE_RANGE = (-6.5, -3.0)


@dataclass
class ScanRow:
    index: int
    n_vertices: int
    magnitude: float
    eps: float
    d_tr: float
    bound: float
    applicable: bool
    violation: bool
    global_regime: bool

    def to_json(self):
        return asdict(self)


def deficit_ratio(K):
    """eps = L^2 / (6 sqrt(3) A(K,-K)) - 1, clipped at 0"""
    return max(perimeter(K) ** 2 / (6 * SQRT3 * mixed_area_minkowski(K, reflect(K))) - 1.0, 0.0)


def perturbed_triangle(rng, magnitude):
    """Regular unit triangle with jittered vertices and up to three small outward bumps"""
    if magnitude < 0:
        raise DomainError(f"perturbation magnitude must be >= 0, got {magnitude}")
    base = regular_triangle(1.0).vertices
    pts = []
    for i in range(3):
        a = base[i] + magnitude * rng.uniform(-1.0, 1.0, size=2)
        b = base[(i + 1) % 3]
        pts.append(a)
        if rng.random() < 0.5:
            e = b - base[i]
            outward = np.array([e[1], -e[0]]) / np.hypot(*e)
            s = rng.uniform(0.2, 0.8)
            pts.append(base[i] + s * e + magnitude * rng.uniform(0.0, 1.0) * outward)
    # a bump can sink below a jittered edge; the hull drops it
    return convex_hull(pts)


def scan(n, seed, tol=1e-6):
    """Run n samples; returns the row list and a summary dict"""
    if n <= 0:
        raise DomainError(f"sample count must be positive, got {n}")
    rng = np.random.default_rng(seed)
    rows = []
    for index in range(n):
        magnitude = 10.0 ** rng.uniform(*MAGNITUDE_RANGE)
        K = perturbed_triangle(rng, magnitude)
        eps = deficit_ratio(K)
        rho, _ = d_tr(K, tol)
        bound = BOUND_FACTOR * math.sqrt(eps)
        applicable = rho <= DTR_LIMIT and eps <= EPS_LIMIT
        violation = applicable and rho > bound + tol
        rows.append(ScanRow(index, K.n, magnitude, eps, rho, bound, applicable, violation,
                            eps <= GLOBAL_EPS_LIMIT))
        if violation:
            logger.warning(f"sample {index}: d_tr {rho:.6g} exceeds 400 sqrt(eps) = {bound:.6g}")
        else:
            logger.debug(f"sample {index}: eps {eps:.3g}, d_tr {rho:.3g}, bound {bound:.3g}")

    summary = {
        'samples': n,
        'seed': seed,
        'applicable': sum(r.applicable for r in rows),
        'violations': sum(r.violation for r in rows),
        'global_regime': sum(r.global_regime for r in rows),
        'max_dtr_over_bound': max((r.d_tr / r.bound for r in rows if r.applicable and r.bound > 0), default=0.0),
    }
    logger.info(f"stability scan: {summary['applicable']}/{n} applicable, {summary['violations']} violations")
    return rows, summary
