#!/usr/bin/env python3
"""
Lemma Verifier
==============
Computer-assisted certification of the eigenvalue bounds behind the hexagon
lemma. With a1 = 2 and x = (a2, a3, t1, t2, t3),

    f2 = (a1+a2+a3)(-a1+a2+a3)(a1-a2+a3)(a1+a2-a3)      (= 16 A(T)^2)
    f1 = (a1+a2+a3)^2 + f2 (t1/a1 + t2/a2 + t3/a3)^2
    f  = f1 - 3 sqrt(3) sqrt(f2) (1 + t1 t2 + t2 t3 + t3 t1)

and ftilde(y) = f(S y) for the orthonormal basis S = (e1 .. e5). Over the
box W~ = [2, 13/6]^2 x [-0.14, 0.14]^2 x [0, 0.3] the leading 4x4 block H(y)
of the Hessian of ftilde must satisfy, for every v with some v_i = 1 and
all |v_j| <= 1,

    quadratic   <v, H v> >= 2 |v|^2
    norm        |H v|^2  >= 4 |v|^2

Both are certified by adaptive bisection of W~ x {faces} x [-1, 1]^3, with
Hessian enclosures from degree-6 interval Taylor jets.

Usage:
    report = verify('norm', VerifyConfig(workers=4))
    print(report.status, report.subsets_processed)
"""

import math
import time
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import List, Optional, Tuple

import numpy as np

import config
from errors import DomainError
from hexagon_construction import closed_form_quantities
from interval_core import Box, Interval, iv_sqrt
from taylor_ad import IntervalMatrix, hessian_enclosure, jet_lift

logger = logging.getLogger(__name__)
subset_logger = logging.getLogger('bw.subsets')

A1 = 2.0
SQRT27 = iv_sqrt(Interval(27.0, 27.0))
SQRT27_FLOAT = math.sqrt(27.0)

INEQUALITIES = ('quadratic', 'norm')
MODES = ('enhanced', 'fallback')
REFERENCE = {
    'quadratic': {'subsets': 25880, 'time': '8m14s'},
    'norm': {'subsets': 2440, 'time': '46s'},
}
FRONTIER_SNAPSHOT = 20
COUNTEREXAMPLE_TOL = 1e-9


def _upper(fr):
    return Interval.from_fraction(Fraction(fr)).hi


def _lower(fr):
    return Interval.from_fraction(Fraction(fr)).lo


# The lemma's parameter box W and the box W~ that contains its image under S^T
W_BOUNDS = [(2.0, _upper(Fraction(13, 6))), (2.0, _upper(Fraction(13, 6))),
            (0.0, _upper(Fraction(1, 6))), (0.0, _upper(Fraction(1, 6))), (0.0, _upper(Fraction(1, 6)))]
W_TILDE_BOUNDS = [(2.0, _upper(Fraction(13, 6))), (2.0, _upper(Fraction(13, 6))),
                  (_lower(Fraction(-14, 100)), _upper(Fraction(14, 100))),
                  (_lower(Fraction(-14, 100)), _upper(Fraction(14, 100))),
                  (0.0, _upper(Fraction(3, 10)))]


@dataclass(frozen=True)
class LemmaPoint:
    a2: float
    a3: float
    t1: float
    t2: float
    t3: float

    @property
    def t0(self):
        return (self.t1 + self.t2 + self.t3) / 3

    def as_tuple(self):
        return (self.a2, self.a3, self.t1, self.t2, self.t3)

    def in_domain(self):
        return all(lo <= x <= hi for x, (lo, hi) in zip(self.as_tuple(), W_BOUNDS))

    def critical_point(self):
        """z_t on the critical line with t = t0"""
        t = self.t0
        return LemmaPoint(2.0, 2.0, t, t, t)

    def distance_sq_to_critical(self):
        t = self.t0
        return ((self.a2 - 2) ** 2 + (self.a3 - 2) ** 2 +
                (self.t1 - t) ** 2 + (self.t2 - t) ** 2 + (self.t3 - t) ** 2)


class BasisChange:
    """Orthonormal basis e1..e5 with S = (e1 .. e5) as interval entries"""

    def __init__(self, identity=False):
        one = Interval(1.0, 1.0)
        zero = Interval(0.0, 0.0)
        S = [[zero] * 5 for _ in range(5)]
        if identity:
            for i in range(5):
                S[i][i] = one
        else:
            r2 = iv_sqrt(Interval(0.5, 0.5))
            r6 = iv_sqrt(Interval.from_fraction(Fraction(1, 6)))
            r6x2 = iv_sqrt(Interval.from_fraction(Fraction(2, 3)))
            r3 = iv_sqrt(Interval.from_fraction(Fraction(1, 3)))
            S[0][0] = one
            S[1][1] = one
            # columns e3, e4, e5 in rows t1, t2, t3
            S[2][2], S[3][2], S[4][2] = r2, -r2, zero
            S[2][3], S[3][3], S[4][3] = r6, r6, -r6x2
            S[2][4], S[3][4], S[4][4] = r3, r3, r3
        self.S = S
        self.S_float = np.array([[entry.mid for entry in row] for row in S])
        self.identity = identity

    @staticmethod
    def _combine(matrix_rows, values):
        out = []
        for row in matrix_rows:
            acc = None
            for coeff, value in zip(row, values):
                if coeff.lo == 0.0 and coeff.hi == 0.0:
                    continue
                if coeff.lo == coeff.hi == 1.0:
                    term = value
                elif coeff.lo == coeff.hi == -1.0:
                    term = -value
                else:
                    term = value * coeff
                acc = term if acc is None else acc + term
            out.append(acc)
        return out

    def apply(self, ys):
        """x = S y for floats, intervals or jets"""
        return self._combine(self.S, ys)

    def apply_transpose(self, xs):
        """y = S^T x"""
        return self._combine([list(col) for col in zip(*self.S)], xs)

    def check_orthogonal(self):
        """S^T S encloses the identity"""
        for i in range(5):
            for j in range(5):
                acc = Interval(0.0, 0.0)
                for r in range(5):
                    acc = acc + self.S[r][i] * self.S[r][j]
                if not acc.contains(1.0 if i == j else 0.0):
                    return False
        return True


BASIS = BasisChange()
IDENTITY_BASIS = BasisChange(identity=True)


# f on floats, intervals and jets

def _sq(x):
    return x * x if isinstance(x, float) else x.square()


def _sqrt(x):
    if isinstance(x, float):
        if x <= 0:
            raise DomainError(f"f2 = {x} <= 0: degenerate triangle")
        return math.sqrt(x)
    if isinstance(x, Interval) and x.lo <= 0:
        raise DomainError(f"f2 enclosure {x} touches 0: degenerate triangle")
    return x.sqrt()


def _f_parts(a2, a3, t1, t2, t3):
    a1 = A1
    s = a1 + a2 + a3
    f2 = s * (-a1 + a2 + a3) * (a1 - a2 + a3) * (a1 + a2 - a3)
    ratio = t1 / a1 + t2 / a2 + t3 / a3
    f1 = _sq(s) + f2 * _sq(ratio)
    root = _sqrt(f2)
    const = SQRT27_FLOAT if isinstance(root, float) else SQRT27
    return f1, f2, f1 - root * const * (1.0 + t1 * t2 + t2 * t3 + t3 * t1)


def eval_f(x):
    """f at a point (float) or over a 5-dim Box (certified Interval)"""
    if isinstance(x, Box):
        if x.n != 5:
            raise DomainError(f"f takes 5 arguments, got a {x.n}-dim box")
        return _f_parts(*x.dims)[2]
    if isinstance(x, LemmaPoint):
        x = x.as_tuple()
    values = [float(v) for v in x]
    if len(values) != 5:
        raise DomainError(f"f takes 5 arguments, got {len(values)}")
    return _f_parts(*values)[2]


def eval_ftilde_jet(ybox, degree=None, basis=BASIS):
    """Jet of ftilde(y) = f(S y) over ybox"""
    degree = config.BW_JET_DEGREE if degree is None else degree
    ys = [jet_lift(ybox, i, degree) for i in range(5)]
    return _f_parts(*basis.apply(ys))[2]


def full_hessian(ybox, degree=None, mode='enhanced', basis=BASIS):
    degree = config.BW_JET_DEGREE if degree is None else degree
    over_box = eval_ftilde_jet(ybox, degree, basis)
    at_mid = eval_ftilde_jet(ybox.midpoint(), degree, basis)
    return hessian_enclosure(over_box, at_mid, ybox, mode)


def hessian_minor(ybox, degree=None, mode='enhanced'):
    """4x4 leading block H(y) enclosed over ybox"""
    return full_hessian(ybox, degree, mode).minor(4)


def float_hessian(x, basis=IDENTITY_BASIS):
    """Hessian of f (or ftilde for basis=BASIS) at a point, as floats"""
    H = full_hessian(Box.point([float(v) for v in x]), degree=2, mode='fallback', basis=basis)
    return H.mid()


def float_hessian_tilde(y):
    """Hessian of ftilde at y via S^T D^2 f(S y) S"""
    S = BASIS.S_float
    x = S @ np.asarray(y, dtype=float)
    return S.T @ float_hessian(x) @ S


# Certificates

def _face_vector(face, vbox):
    if not 0 <= face < 4:
        raise DomainError(f"face index must be in 0..3, got {face}")
    if vbox.n != 3:
        raise DomainError(f"v box must have 3 dimensions, got {vbox.n}")
    free = iter(vbox.dims)
    return [Interval(1.0, 1.0) if i == face else next(free) for i in range(4)]


def _quadratic_form(M, v, shift):
    """<v, (M - shift I) v> with squares on the diagonal"""
    n = len(v)
    acc = Interval(0.0, 0.0)
    for i in range(n):
        acc = acc + (M.entry(i, i) - shift) * v[i].square()
    for i in range(n):
        for j in range(i + 1, n):
            acc = acc + 2.0 * M.entry(i, j) * (v[i] * v[j])
    return acc


def _matrix_square(H):
    """Interval enclosure of H(y)^2 for every symmetric H(y) in H"""
    n = H.rows
    lo = np.zeros((n, n))
    hi = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            acc = Interval(0.0, 0.0)
            for k in range(n):
                if k == i == j:
                    term = H.entry(i, k).square()
                else:
                    term = H.entry(i, k) * H.entry(k, j)
                acc = acc + term
            lo[i, j] = lo[j, i] = acc.lo
            hi[i, j] = hi[j, i] = acc.hi
    return IntervalMatrix(lo, hi)


def certify_quadratic(H, face, vbox):
    """(passed, margin): lower bound of <v,Hv> - 2|v|^2 over the face box"""
    v = _face_vector(face, vbox)
    margin = _quadratic_form(H, v, 2.0).lo
    return margin >= 0.0, margin


def certify_norm(H, face, vbox, H2=None):
    """(passed, margin): lower bound of |Hv|^2 - 4|v|^2 over the face box.

    Two sound enclosures are formed, the direct one and <v, (H^2 - 4I) v>;
    the better lower bound is kept.
    """
    v = _face_vector(face, vbox)
    n = len(v)
    direct = Interval(0.0, 0.0)
    for i in range(n):
        row = Interval(0.0, 0.0)
        for j in range(n):
            row = row + H.entry(i, j) * v[j]
        direct = direct + row.square() - 4.0 * v[i].square()
    if H2 is None:
        H2 = _matrix_square(H)
    gram = _quadratic_form(H2, v, 4.0)
    margin = max(direct.lo, gram.lo)
    return margin >= 0.0, margin


def _float_margin(ineq, Hf, v):
    v = np.asarray(v, dtype=float)
    if ineq == 'quadratic':
        return float(v @ Hf @ v - 2.0 * v @ v)
    Hv = Hf @ v
    return float(Hv @ Hv - 4.0 * v @ v)


# Bisection driver

@dataclass
class VerifyConfig:
    max_depth: int = config.BW_MAX_DEPTH
    max_subsets: int = config.BW_MAX_SUBSETS
    degree: int = config.BW_JET_DEGREE
    mode: str = 'enhanced'
    wall_clock: float = config.BW_WALL_CLOCK
    workers: int = config.BW_WORKERS
    domain: List[Tuple[float, float]] = field(default_factory=lambda: list(W_TILDE_BOUNDS))

    def validate(self):
        if self.mode not in MODES:
            raise DomainError(f"unknown enclosure mode: {self.mode}")
        if not 2 <= self.degree <= 6:
            raise DomainError(f"jet degree must be in [2, 6], got {self.degree}")
        if self.max_depth <= 0 or self.max_subsets <= 0 or self.workers <= 0:
            raise DomainError("depth, subset and worker budgets must be positive")
        if len(self.domain) != 5 or any(hi <= lo for lo, hi in self.domain):
            raise DomainError("domain must have 5 dimensions of positive width")
        return self

    def to_json(self):
        return {
            'max_depth': self.max_depth,
            'max_subsets': self.max_subsets,
            'degree': self.degree,
            'mode': self.mode,
            'wall_clock': self.wall_clock,
            'workers': self.workers,
            'domain': [list(b) for b in self.domain],
        }


@dataclass(frozen=True)
class VerifyTask:
    wbox: Box
    face: int
    vbox: Box
    depth: int = 0

    def split(self, scales):
        """Bisect the widest dimension relative to its starting width; ties go to the lowest index"""
        widths = np.concatenate([self.wbox.widths, self.vbox.widths]) / scales
        dim = int(np.argmax(widths))
        if dim < 5:
            left, right = self.wbox.bisect(dim)
            return (VerifyTask(left, self.face, self.vbox, self.depth + 1),
                    VerifyTask(right, self.face, self.vbox, self.depth + 1))
        left, right = self.vbox.bisect(dim - 5)
        return (VerifyTask(self.wbox, self.face, left, self.depth + 1),
                VerifyTask(self.wbox, self.face, right, self.depth + 1))

    def to_json(self):
        return {'wbox': self.wbox.to_json(), 'face': self.face + 1,
                'vbox': self.vbox.to_json(), 'depth': self.depth}


@dataclass
class VerifyReport:
    inequality: str
    status: str
    subsets_processed: int = 0
    tasks_evaluated: int = 0
    max_depth: int = 0
    wall_time: float = 0.0
    hessians_computed: int = 0
    failed_task: Optional[dict] = None
    counterexample: Optional[dict] = None
    frontier_size: int = 0
    frontier: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def verified(self):
        return self.status == 'VERIFIED'

    def to_json(self):
        ref = REFERENCE[self.inequality]
        return {
            'inequality': self.inequality,
            'status': self.status,
            'subsets_processed': self.subsets_processed,
            'tasks_evaluated': self.tasks_evaluated,
            'max_depth': self.max_depth,
            'wall_time': self.wall_time,
            'hessians_computed': self.hessians_computed,
            'failed_task': self.failed_task,
            'counterexample': self.counterexample,
            'frontier_size': self.frontier_size,
            'frontier': self.frontier,
            'config': self.config,
            'reference_subsets': ref['subsets'],
            'reference_time': ref['time'],
            'log_format_version': config.LOG_FORMAT_VERSION,
        }


def _hessian_job(args):
    bounds, degree, mode = args
    H = hessian_minor(Box.from_bounds(bounds), degree, mode)
    return H.lo, H.hi


def _initial_tasks(domain):
    wbox = Box.from_bounds(domain)
    vbox = Box.from_bounds([(-1.0, 1.0)] * 3)
    return [VerifyTask(wbox, face, vbox, 0) for face in range(4)]


def _midpoint_counterexample(ineq, task):
    y = task.wbox.midpoint().lo
    v = [1.0 if i == task.face else 0.0 for i in range(4)]
    free = [i for i in range(4) if i != task.face]
    for i, c in zip(free, task.vbox.midpoint().lo):
        v[i] = c
    Hf = float_hessian_tilde(y)[:4, :4]
    margin = _float_margin(ineq, Hf, v)
    if margin < -COUNTEREXAMPLE_TOL:
        return {'y': y.tolist(), 'v': v, 'margin': margin}
    return None


def verify(ineq, cfg=None):
    """Adaptive bisection over W~ x faces x [-1,1]^3; returns a VerifyReport.

    Tasks are processed generation by generation in a fixed order, so the
    counts do not depend on the number of workers.
    """
    if ineq not in INEQUALITIES:
        raise DomainError(f"unknown inequality: {ineq}")
    cfg = (cfg or VerifyConfig()).validate()
    certify = certify_quadratic if ineq == 'quadratic' else certify_norm
    report = VerifyReport(inequality=ineq, status='VERIFIED', config=cfg.to_json())
    scales = np.array([hi - lo for lo, hi in cfg.domain] + [2.0, 2.0, 2.0])
    start = time.monotonic()

    logger.info(f"Verifying {ineq} form: degree {cfg.degree}, mode {cfg.mode}, "
                f"max depth {cfg.max_depth}, max subsets {cfg.max_subsets}, workers {cfg.workers}")

    frontier = _initial_tasks(cfg.domain)
    cache = {}
    pool = ProcessPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
    try:
        generation = 0
        previous = 0
        while frontier:
            remaining = cfg.max_subsets - report.tasks_evaluated
            todo = frontier[:max(remaining, 0)]
            missing, seen = [], set(cache)
            for task in todo:
                key = task.wbox.key()
                if key not in seen:
                    seen.add(key)
                    missing.append(key)
            jobs = [(list(key), cfg.degree, cfg.mode) for key in missing]
            if pool is not None and len(jobs) > 1:
                results = list(pool.map(_hessian_job, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))
            else:
                results = [_hessian_job(job) for job in jobs]
            for key, (lo, hi) in zip(missing, results):
                H = IntervalMatrix(lo, hi)
                cache[key] = (H, _matrix_square(H) if ineq == 'norm' else None)
            report.hessians_computed += len(missing)
            elapsed = time.monotonic() - start
            per_task = elapsed / report.tasks_evaluated if report.tasks_evaluated else 0.0
            growth = len(frontier) / previous if previous else 1.0
            logger.info(f"Generation {generation}: {len(frontier)} tasks ({growth:.2f}x the previous), "
                        f"{len(missing)} new Hessians, {report.tasks_evaluated} evaluated in {elapsed:.0f}s, "
                        f"this generation needs about {per_task * len(frontier):.0f}s")
            previous = len(frontier)

            next_frontier = []
            for index, task in enumerate(frontier):
                over_time = cfg.wall_clock > 0 and time.monotonic() - start > cfg.wall_clock
                if report.tasks_evaluated >= cfg.max_subsets or over_time:
                    pending = frontier[index:] + next_frontier
                    report.status = 'BUDGET_EXCEEDED'
                    report.frontier_size = len(pending)
                    report.frontier = [t.to_json() for t in pending[:FRONTIER_SNAPSHOT]]
                    logger.warning(f"Budget exhausted with {len(pending)} open tasks")
                    return _finish(report, start)
                H, H2 = cache[task.wbox.key()]
                if ineq == 'norm':
                    passed, margin = certify(H, task.face, task.vbox, H2)
                else:
                    passed, margin = certify(H, task.face, task.vbox)
                report.tasks_evaluated += 1
                report.max_depth = max(report.max_depth, task.depth)
                if subset_logger.isEnabledFor(logging.DEBUG):
                    subset_logger.debug(f"depth={task.depth} face={task.face + 1} "
                                        f"w={task.wbox.bounds()} v={task.vbox.bounds()} "
                                        f"margin={margin:.6e} {'pass' if passed else 'split'}")
                if passed:
                    report.subsets_processed += 1
                    continue
                counterexample = _midpoint_counterexample(ineq, task)
                if counterexample is not None or task.depth >= cfg.max_depth:
                    report.status = 'FAILED'
                    report.failed_task = task.to_json()
                    report.counterexample = counterexample
                    logger.warning(f"Certificate failed at depth {task.depth}: {task.to_json()}")
                    return _finish(report, start)
                next_frontier.extend(task.split(scales))

            live = {t.wbox.key() for t in next_frontier}
            cache = {k: v for k, v in cache.items() if k in live}
            frontier = next_frontier
            generation += 1
    finally:
        if pool is not None:
            pool.shutdown()
    return _finish(report, start)


def _finish(report, start):
    report.wall_time = time.monotonic() - start
    logger.info(f"{report.inequality}: {report.status}, {report.subsets_processed} subsets, "
                f"{report.tasks_evaluated} tasks, max depth {report.max_depth}, {report.wall_time:.1f}s")
    return report


# Spot checks

CRITICAL_TS = (Fraction(0), Fraction(1, 24), Fraction(1, 12), Fraction(1, 8), Fraction(1, 6))


def _fd_gradient(x, step):
    x = np.asarray(x, dtype=float)
    grad = np.zeros(5)
    for i in range(5):
        e = np.zeros(5)
        e[i] = step
        grad[i] = (eval_f(x + e) - eval_f(x - e)) / (2 * step)
    return grad


def spot_check_gradient(step=1e-5, tol=1e-6):
    """f and its gradient vanish on the critical line z_t = (2, 2, t, t, t)"""
    rows = []
    ok = True
    for t in CRITICAL_TS:
        z = [2.0, 2.0, float(t), float(t), float(t)]
        value = eval_f(z)
        fd_norm = float(np.linalg.norm(_fd_gradient(z, step)))
        box = Box(tuple([Interval(2.0, 2.0)] * 2 + [Interval.from_fraction(t)] * 3))
        jet = eval_ftilde_jet(box, degree=1, basis=IDENTITY_BASIS)
        ad_zero = all(g.contains(0.0) for g in jet.gradient())
        row_ok = abs(value) <= 1e-12 and fd_norm <= tol and ad_zero
        ok = ok and row_ok
        rows.append({'t': float(t), 'f': value, 'fd_gradient_norm': fd_norm,
                     'ad_gradient_contains_zero': ad_zero, 'ok': row_ok})
    generic = [2.05, 2.03, 0.1, 0.05, 0.02]
    generic_norm = float(np.linalg.norm(_fd_gradient(generic, step)))
    return {'ok': ok and generic_norm > 1e-3, 'critical_line': rows,
            'generic_point': {'x': generic, 'fd_gradient_norm': generic_norm}}


def check_basis_containment():
    """Certify S^T W inside W~ and the sharper bounds on (y3, y4) and y5.

    The box image is enclosed with interval arithmetic. y3^2 + y4^2 is a
    convex quadratic and y5 is linear in t, so their maxima over the t-cube
    sit at its vertices, which are checked in exact rational arithmetic.
    """
    image = BASIS.apply_transpose(list(Box.from_bounds(W_BOUNDS).dims))
    target = Box.from_bounds(W_TILDE_BOUNDS)
    inside = all(tgt.contains(img) for tgt, img in zip(target.dims, image))

    sixth = Fraction(1, 6)
    planar_ok = True
    y5_ok = True
    for t1, t2, t3 in product((Fraction(0), sixth), repeat=3):
        planar = (t1 - t2) ** 2 / 2 + (t1 + t2 - 2 * t3) ** 2 / 6
        planar_ok = planar_ok and planar <= Fraction(2, 3) * sixth ** 2
        # y5 = (t1+t2+t3)/sqrt(3) <= sqrt(3)/6  iff  t1+t2+t3 <= 1/2
        y5_ok = y5_ok and 0 <= t1 + t2 + t3 <= Fraction(1, 2)
    return {
        'ok': inside and planar_ok and y5_ok and BASIS.check_orthogonal(),
        'image': [iv.to_json() for iv in image],
        'inside_w_tilde': inside,
        'planar_bound': planar_ok,
        'y5_bound': y5_ok,
        'orthogonal': BASIS.check_orthogonal(),
    }


def check_lemma_conclusion(samples=10_000, seed=None, tol=1e-9):
    """L(H0)^2 - 6 sqrt(3) A(H2,-H2) >= |x - z_t0|^2 at random points of W"""
    rng = np.random.default_rng(config.BW_SEED if seed is None else seed)
    lo = np.array([b[0] for b in W_BOUNDS])
    hi = np.array([2 + 1 / 6, 2 + 1 / 6, 1 / 6, 1 / 6, 1 / 6])
    worst = math.inf
    violations = 0
    for x in rng.uniform(lo, hi, size=(samples, 5)):
        point = LemmaPoint(*x)
        q = closed_form_quantities((A1, point.a2, point.a3), (point.t1, point.t2, point.t3))
        slack = q['deficit'] - point.distance_sq_to_critical()
        worst = min(worst, slack)
        if slack < -tol:
            violations += 1
    return {'ok': violations == 0, 'samples': samples, 'violations': violations, 'min_slack': worst}
