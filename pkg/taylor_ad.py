#!/usr/bin/env python3
"""
Taylor AD
=========
Truncated multivariate Taylor jets with interval coefficients.

A jet built over a box B stores, for every multi-index |alpha| <= degree, an
interval enclosing (1/alpha!) * d^alpha g(y) for all y in B. Coefficients
live in two dense numpy arrays (lower / upper endpoints) ordered by graded
lexicographic multi-index; 5 variables at degree 6 is 462 entries.

Usage:
    x = jet_lift(box, 0, 6)
    y = jet_lift(box, 1, 6)
    h = (x * y + 1.0).sqrt()
    H = hessian_enclosure(h_over_box, h_at_mid, box)
"""

import itertools
import logging
from fractions import Fraction
from functools import lru_cache

import numpy as np

from errors import DomainError, InvariantViolation
from interval_core import (
    Box, Interval, vec_add, vec_mul, vec_neg, vec_scale, vec_sub, vec_sum,
)

logger = logging.getLogger(__name__)

MAX_DEGREE = 6


class _IndexTable:
    """Multi-indices of one (nvars, degree) plus truncated-product plan"""

    def __init__(self, nvars, degree):
        self.nvars = nvars
        self.degree = degree
        indices = []
        for total in range(degree + 1):
            level = [c for c in itertools.product(range(total + 1), repeat=nvars) if sum(c) == total]
            indices.extend(sorted(level, reverse=True))
        self.indices = indices
        self.position = {alpha: i for i, alpha in enumerate(indices)}
        self.size = len(indices)
        self.orders = np.array([sum(a) for a in indices], dtype=np.intp)
        # number of multi-indices with total degree <= d
        upto = np.searchsorted(self.orders, np.arange(degree + 1), side='right')

        a_idx, b_idx, c_idx = [], [], []
        for i, alpha in enumerate(indices):
            for j in range(int(upto[degree - sum(alpha)])):
                beta = indices[j]
                a_idx.append(i)
                b_idx.append(j)
                c_idx.append(self.position[tuple(x + y for x, y in zip(alpha, beta))])
        self.prod_a = np.array(a_idx, dtype=np.intp)
        self.prod_b = np.array(b_idx, dtype=np.intp)
        self.prod_c = np.array(c_idx, dtype=np.intp)
        self.prod_counts = np.bincount(self.prod_c, minlength=self.size)

    def unit(self, var, power=1):
        alpha = [0] * self.nvars
        alpha[var] = power
        return self.position[tuple(alpha)]


@lru_cache(maxsize=None)
def index_table(nvars, degree):
    if not 0 <= degree <= MAX_DEGREE:
        raise DomainError(f"jet degree must be in [0, {MAX_DEGREE}], got {degree}")
    if nvars < 1:
        raise DomainError(f"jet needs at least one variable, got {nvars}")
    return _IndexTable(nvars, degree)


def _coerce(x):
    if isinstance(x, Interval):
        return x
    if isinstance(x, (int, float, Fraction, np.floating, np.integer)):
        return Interval.from_fraction(x) if isinstance(x, Fraction) else Interval.point(float(x))
    return None


class Jet:
    """Truncated Taylor expansion with interval coefficients over a box"""

    __slots__ = ('nvars', 'degree', 'lo', 'hi', 'box')

    def __init__(self, nvars, degree, lo, hi, box=None):
        self.nvars = nvars
        self.degree = degree
        self.lo = lo
        self.hi = hi
        self.box = box

    @property
    def table(self):
        return index_table(self.nvars, self.degree)

    def _like(self, lo, hi):
        return Jet(self.nvars, self.degree, lo, hi, self.box)

    def _check(self, other):
        if other.nvars != self.nvars or other.degree != self.degree:
            raise DomainError(
                f"jet shape mismatch: ({self.nvars}, {self.degree}) vs ({other.nvars}, {other.degree})")

    # Coefficient access

    def coeff(self, alpha):
        i = self.table.position[tuple(alpha)]
        return Interval(self.lo[i], self.hi[i])

    @property
    def constant(self):
        return Interval(self.lo[0], self.hi[0])

    def gradient(self):
        t = self.table
        return [Interval(self.lo[t.unit(k)], self.hi[t.unit(k)]) for k in range(self.nvars)]

    def hessian(self):
        """Second derivatives read from the degree-2 coefficients"""
        n = self.nvars
        lo = np.zeros((n, n))
        hi = np.zeros((n, n))
        t = self.table
        for i in range(n):
            for j in range(i, n):
                alpha = [0] * n
                alpha[i] += 1
                alpha[j] += 1
                k = t.position[tuple(alpha)]
                factor = 2.0 if i == j else 1.0
                c_lo, c_hi = vec_scale(factor, self.lo[k], self.hi[k])
                lo[i, j] = lo[j, i] = c_lo
                hi[i, j] = hi[j, i] = c_hi
        return IntervalMatrix(lo, hi)

    # Arithmetic

    def __neg__(self):
        return self._like(*vec_neg(self.lo, self.hi))

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return self._like(*vec_add(self.lo, self.hi, other.lo, other.hi))
        c = _coerce(other)
        if c is None:
            return NotImplemented
        lo, hi = self.lo.copy(), self.hi.copy()
        s = Interval(lo[0], hi[0]) + c
        lo[0], hi[0] = s.lo, s.hi
        return self._like(lo, hi)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return self._like(*vec_sub(self.lo, self.hi, other.lo, other.hi))
        c = _coerce(other)
        if c is None:
            return NotImplemented
        return self + (-c)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check(other)
            t = self.table
            p_lo, p_hi = vec_mul(self.lo[t.prod_a], self.hi[t.prod_a],
                                 other.lo[t.prod_b], other.hi[t.prod_b])
            return self._like(*vec_sum(p_lo, p_hi, t.prod_c, t.size, t.prod_counts))
        c = _coerce(other)
        if c is None:
            return NotImplemented
        return self._like(*vec_scale(c, self.lo, self.hi))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.recip()
        c = _coerce(other)
        if c is None:
            return NotImplemented
        return self * (Interval(1.0, 1.0) / c)

    def __rtruediv__(self, other):
        c = _coerce(other)
        if c is None:
            return NotImplemented
        return self.recip() * c

    def square(self):
        return self * self

    def _compose(self, series):
        """Sum_k series[k] * (self - self_0)^k, truncated at self.degree"""
        delta_lo, delta_hi = self.lo.copy(), self.hi.copy()
        delta_lo[0] = delta_hi[0] = 0.0
        delta = self._like(delta_lo, delta_hi)
        lo = np.zeros(self.table.size)
        hi = np.zeros(self.table.size)
        lo[0], hi[0] = series[0].lo, series[0].hi
        result = self._like(lo, hi)
        power = delta
        for k in range(1, min(len(series), self.degree + 1)):
            if k > 1:
                power = power * delta
            result = result + power * series[k]
        return result

    def sqrt(self):
        g0 = self.constant
        if g0.lo <= 0.0:
            raise DomainError(f"jet sqrt needs a strictly positive constant term, got {g0}")
        root = g0.sqrt()
        inv = Interval(1.0, 1.0) / g0
        series = [root]
        binom = Fraction(1)
        for k in range(1, self.degree + 1):
            binom *= (Fraction(1, 2) - (k - 1)) / k
            series.append(root * (inv ** k) * Interval.from_fraction(binom))
        return self._compose(series)

    def recip(self):
        g0 = self.constant
        if g0.lo <= 0.0 <= g0.hi:
            raise DomainError(f"jet reciprocal of constant term containing zero: {g0}")
        inv = Interval(1.0, 1.0) / g0
        series = [inv]
        for k in range(1, self.degree + 1):
            term = inv ** (k + 1)
            series.append(-term if k % 2 else term)
        return self._compose(series)

    def max_width(self):
        return float(np.max(self.hi - self.lo))

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, degree={self.degree}, constant={self.constant!r})"


def jet_constant(value, box, degree, nvars=None):
    nvars = box.n if nvars is None else nvars
    t = index_table(nvars, degree)
    c = _coerce(value)
    lo = np.zeros(t.size)
    hi = np.zeros(t.size)
    lo[0], hi[0] = c.lo, c.hi
    return Jet(nvars, degree, lo, hi, box)


def jet_lift(box, var, degree):
    """Jet of the coordinate function y_var over box"""
    if not 0 <= var < box.n:
        raise DomainError(f"variable {var} out of range for {box.n}-dim box")
    t = index_table(box.n, degree)
    lo = np.zeros(t.size)
    hi = np.zeros(t.size)
    lo[0], hi[0] = box[var].lo, box[var].hi
    if degree >= 1:
        lo[t.unit(var)] = hi[t.unit(var)] = 1.0
    return Jet(box.n, degree, lo, hi, box)


def jet_arith(a, b, op):
    if op == 'add':
        return a + b
    if op == 'sub':
        return a - b
    if op == 'mul':
        return a * b
    if op == 'div':
        return a / b
    raise DomainError(f"unknown jet operation: {op}")


def jet_sqrt(a):
    return a.sqrt()


def jet_recip(a):
    return a.recip()


class IntervalMatrix:
    """Rectangular matrix of intervals stored as endpoint arrays"""

    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 2:
            raise DomainError(f"interval matrix needs matching 2-d endpoint arrays, got {lo.shape}, {hi.shape}")
        if np.any(lo > hi):
            raise DomainError("interval matrix has an empty entry")
        self.lo = lo
        self.hi = hi

    @classmethod
    def point(cls, m):
        m = np.asarray(m, dtype=float)
        return cls(m.copy(), m.copy())

    @property
    def shape(self):
        return self.lo.shape

    @property
    def rows(self):
        return self.lo.shape[0]

    @property
    def cols(self):
        return self.lo.shape[1]

    def entry(self, i, j):
        return Interval(self.lo[i, j], self.hi[i, j])

    def minor(self, k):
        """Leading principal k x k block"""
        return IntervalMatrix(self.lo[:k, :k].copy(), self.hi[:k, :k].copy())

    def mid(self):
        return self.lo + (self.hi - self.lo) / 2

    def widths(self):
        return self.hi - self.lo

    def max_width(self):
        return float(np.max(self.hi - self.lo))

    def contains_point(self, m, slack=0.0):
        m = np.asarray(m, dtype=float)
        return bool(np.all(self.lo - slack <= m) and np.all(m <= self.hi + slack))

    def contains(self, other):
        return bool(np.all(self.lo <= other.lo) and np.all(other.hi <= self.hi))

    def intersect(self, other):
        lo = np.maximum(self.lo, other.lo)
        hi = np.minimum(self.hi, other.hi)
        if np.any(lo > hi):
            raise InvariantViolation("disjoint interval matrix enclosures")
        return IntervalMatrix(lo, hi)

    def to_json(self):
        return [[[self.lo[i, j], self.hi[i, j]] for j in range(self.cols)] for i in range(self.rows)]

    def __repr__(self):
        return f"IntervalMatrix({self.rows}x{self.cols}, max_width={self.max_width():.3g})"


class _HessianPlan:
    """For every entry (i, j) and gamma, the coefficient feeding d^gamma"""

    def __init__(self, nvars, degree):
        t = index_table(nvars, degree)
        n = nvars
        pairs = [(i, j) for i in range(n) for j in range(i, n)]
        gammas = [g for g in t.indices if sum(g) <= degree - 2]
        pair_id, alpha_idx, factor, order, gamma_id = [], [], [], [], []
        for p, (i, j) in enumerate(pairs):
            for g_id, g in enumerate(gammas):
                alpha = list(g)
                alpha[i] += 1
                alpha[j] += 1
                if i == j:
                    k = (g[i] + 2) * (g[i] + 1)
                else:
                    k = (g[i] + 1) * (g[j] + 1)
                pair_id.append(p)
                alpha_idx.append(t.position[tuple(alpha)])
                factor.append(float(k))
                order.append(sum(g))
                gamma_id.append(g_id)
        self.pairs = pairs
        self.gammas = np.array(gammas, dtype=np.intp).reshape(len(gammas), n)
        self.pair_id = np.array(pair_id, dtype=np.intp)
        self.alpha_idx = np.array(alpha_idx, dtype=np.intp)
        self.factor = np.array(factor)
        self.order = np.array(order, dtype=np.intp)
        self.gamma_id = np.array(gamma_id, dtype=np.intp)


@lru_cache(maxsize=None)
def _hessian_plan(nvars, degree):
    return _HessianPlan(nvars, degree)


def _offset_powers(box, mid, plan, max_power):
    """Interval enclosures of (y - mid)^gamma over box for every gamma in plan"""
    n = box.n
    table_lo = np.ones((n, max_power + 1))
    table_hi = np.ones((n, max_power + 1))
    for k in range(n):
        d = box[k] - mid[k]
        for p in range(1, max_power + 1):
            dp = d ** p
            table_lo[k, p], table_hi[k, p] = dp.lo, dp.hi
    g = plan.gammas
    lo = np.ones(g.shape[0])
    hi = np.ones(g.shape[0])
    for k in range(n):
        if not np.any(g[:, k]):
            continue
        lo, hi = vec_mul(lo, hi, table_lo[k, g[:, k]], table_hi[k, g[:, k]])
    return lo, hi


def hessian_enclosure(fjet_over_box, fjet_at_mid, box, mode='enhanced'):
    """Interval matrix containing the Hessian of the jet's function at every y in box.

    'fallback' reads the over-box degree-2 coefficients directly. 'enhanced'
    also forms, for each remainder order r, the Taylor expansion of every
    second derivative about the midpoint, with terms of order < r taken from
    the midpoint jet and the order-r remainder from the over-box jet, and
    intersects all these enclosures.
    """
    if mode not in ('enhanced', 'fallback'):
        raise DomainError(f"unknown enclosure mode: {mode}")
    jb, jm = fjet_over_box, fjet_at_mid
    jb._check(jm)
    if jb.degree < 2:
        raise DomainError("Hessian enclosure needs jets of degree >= 2")
    n = jb.nvars
    plan = _hessian_plan(n, jb.degree)
    npairs = len(plan.pairs)
    max_order = jb.degree - 2 if mode == 'enhanced' else 0

    anchor = jm.box if jm.box is not None else box.midpoint()
    if not anchor.is_point():
        raise DomainError("midpoint jet must be built over a point box")
    mid = [float(x) for x in anchor.lo]
    if not box.contains(mid):
        raise DomainError("midpoint jet is not anchored inside the box")

    k_lo, k_hi = plan.factor, plan.factor
    box_lo, box_hi = vec_mul(k_lo, k_hi, jb.lo[plan.alpha_idx], jb.hi[plan.alpha_idx])
    mid_lo, mid_hi = vec_mul(k_lo, k_hi, jm.lo[plan.alpha_idx], jm.hi[plan.alpha_idx])

    if max_order > 0:
        pw_lo, pw_hi = _offset_powers(box, mid, plan, max_order)
        pw_lo, pw_hi = pw_lo[plan.gamma_id], pw_hi[plan.gamma_id]
        # order-0 terms carry the exact offset power [1, 1]
        lead = plan.order == 0
        b_lo, b_hi = vec_mul(box_lo, box_hi, pw_lo, pw_hi)
        m_lo, m_hi = vec_mul(mid_lo, mid_hi, pw_lo, pw_hi)
        box_lo, box_hi = np.where(lead, box_lo, b_lo), np.where(lead, box_hi, b_hi)
        mid_lo, mid_hi = np.where(lead, mid_lo, m_lo), np.where(lead, mid_hi, m_hi)

    best_lo = np.full(npairs, -np.inf)
    best_hi = np.full(npairs, np.inf)
    for r in range(max_order + 1):
        use_mid = plan.order < r
        use_box = plan.order == r
        sel = use_mid | use_box
        t_lo = np.where(use_mid, mid_lo, box_lo)[sel]
        t_hi = np.where(use_mid, mid_hi, box_hi)[sel]
        lo, hi = vec_sum(t_lo, t_hi, plan.pair_id[sel], npairs)
        best_lo = np.maximum(best_lo, lo)
        best_hi = np.minimum(best_hi, hi)
    if np.any(best_lo > best_hi):
        raise InvariantViolation("Hessian enclosures of different remainder orders are disjoint")

    lo = np.zeros((n, n))
    hi = np.zeros((n, n))
    for p, (i, j) in enumerate(plan.pairs):
        lo[i, j] = lo[j, i] = best_lo[p]
        hi[i, j] = hi[j, i] = best_hi[p]
    return IntervalMatrix(lo, hi)


def point_box(coords):
    return Box.point([float(c) for c in coords])
