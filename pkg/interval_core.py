#!/usr/bin/env python3
"""
Interval Core
=============
Outward-rounded interval arithmetic and boxes. Every certified claim made
by the lemma verifier bottoms out in this module.

Two rounding backends are available for the scalar Interval type:

    step      (default) native round-to-nearest followed by an exact error
              check (TwoSum / Dekker product); the endpoint is moved to the
              next representable float only when the operation was inexact.
    hardware  upward rounding switched on through fesetround (ctypes); only
              used when a runtime probe confirms the mode takes effect.

The vec_* kernels work on numpy endpoint arrays and always step outward;
they carry the Taylor-jet arithmetic.
"""

import math
import ctypes
import ctypes.util
import contextlib
import logging
import platform
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

import numpy as np

import config
from errors import DomainError

logger = logging.getLogger(__name__)

_INF = math.inf
_SPLITTER = 134217729.0  # 2**27 + 1
_SAFE_HI = 2.0 ** 995
_SAFE_LO = 2.0 ** -900
_UNIT_ROUNDOFF = 2.0 ** -53


def _down(x):
    return math.nextafter(x, -_INF)


def _up(x):
    return math.nextafter(x, _INF)


def _finite(x, what):
    if not math.isfinite(x):
        raise DomainError(f"non-finite result in interval {what}")
    return x


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = al * bl - (((p - ah * bh) - al * bh) - ah * bl)
    return p, e


def _bracket(r, e):
    """Bounds of the exact value r + e where |e| is tiny relative to r"""
    if e == 0:
        return r, r
    if e > 0:
        return r, _up(r)
    return _down(r), r


def _add_bounds(a, b):
    s = _finite(a + b, 'add')
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return _bracket(s, e)


def _mul_bounds(a, b):
    if a == 0.0 or b == 0.0:
        return 0.0, 0.0
    p = _finite(a * b, 'mul')
    if abs(p) > _SAFE_LO and abs(a) < _SAFE_HI and abs(b) < _SAFE_HI:
        _, e = _two_prod(a, b)
        return _bracket(p, e)
    return _down(p), _up(p)


def _div_bounds(a, b):
    if a == 0.0:
        return 0.0, 0.0
    q = _finite(a / b, 'div')
    if _SAFE_LO < abs(q) < _SAFE_HI and _SAFE_LO < abs(b) < _SAFE_HI and abs(a) > _SAFE_LO:
        p, e = _two_prod(q, b)
        r = (a - p) - e
        # a/b - q = r/b
        return _bracket(q, r if b > 0 else -r)
    return _down(q), _up(q)


def _sqrt_bounds(x):
    s = math.sqrt(x)
    if s == 0.0:
        return 0.0, 0.0
    if _SAFE_LO < x < _SAFE_HI:
        p, e = _two_prod(s, s)
        d = (p - x) + e
        # sign(s - sqrt(x)) == sign(s*s - x)
        return _bracket(s, -d)
    return _down(s), _up(s)


class _HardwareRounding:
    """Upward rounding mode through the C library"""

    _FE_UPWARD = {
        'x86_64': 0x0800, 'amd64': 0x0800, 'i386': 0x0800, 'i686': 0x0800,
        'aarch64': 0x400000, 'arm64': 0x400000,
    }

    def __init__(self):
        self.available = False
        self._mode = self._FE_UPWARD.get(platform.machine().lower())
        path = ctypes.util.find_library('m')
        if self._mode is None or path is None:
            return
        try:
            libm = ctypes.CDLL(path)
            self._fesetround = libm.fesetround
            self._fegetround = libm.fegetround
        except (OSError, AttributeError) as e:
            logger.info(f"hardware rounding unavailable: {e}")
            return
        self.available = self._probe()

    def _probe(self):
        one, tiny = 1.0, math.ldexp(1.0, -60)
        with self.upward():
            raised = one + tiny
        return raised > 1.0 and one + tiny == 1.0

    @contextlib.contextmanager
    def upward(self):
        saved = self._fegetround()
        if self._fesetround(self._mode) != 0:
            raise DomainError("fesetround rejected upward mode")
        try:
            yield
        finally:
            self._fesetround(saved)

    def add(self, alo, ahi, blo, bhi):
        with self.upward():
            hi = ahi + bhi
            lo = -((-alo) + (-blo))
        return _finite(lo, 'add'), _finite(hi, 'add')

    def mul(self, alo, ahi, blo, bhi):
        pairs = ((alo, blo), (alo, bhi), (ahi, blo), (ahi, bhi))
        with self.upward():
            hi = max(x * y for x, y in pairs)
            lo = -max((-x) * y for x, y in pairs)
        return _finite(lo, 'mul'), _finite(hi, 'mul')

    def div(self, alo, ahi, blo, bhi):
        pairs = ((alo, blo), (alo, bhi), (ahi, blo), (ahi, bhi))
        with self.upward():
            hi = max(x / y for x, y in pairs)
            lo = -max((-x) / y for x, y in pairs)
        return _finite(lo, 'div'), _finite(hi, 'div')

    def sqrt(self, lo, hi):
        with self.upward():
            s_hi = math.sqrt(hi)
            s_lo = math.sqrt(lo)
        return (_down(s_lo) if s_lo > 0 else 0.0), s_hi


_hardware = None
_backend = 'step'


def set_rounding_backend(name):
    """Select 'step' or 'hardware'; returns the backend actually in use"""
    global _hardware, _backend
    if name == 'hardware':
        if _hardware is None:
            _hardware = _HardwareRounding()
        if not _hardware.available:
            logger.warning("hardware directed rounding not available, using step backend")
            _backend = 'step'
            return _backend
    elif name != 'step':
        raise DomainError(f"unknown rounding backend: {name}")
    _backend = name
    return _backend


def rounding_backend():
    return _backend


def hardware_rounding_available():
    global _hardware
    if _hardware is None:
        _hardware = _HardwareRounding()
    return _hardware.available


def _as_interval(x):
    if isinstance(x, Interval):
        return x
    if isinstance(x, Fraction):
        return Interval.from_fraction(x)
    if isinstance(x, int) and abs(x) > 2 ** 53:
        return Interval.from_fraction(Fraction(x))
    if isinstance(x, (int, float, np.floating, np.integer)):
        return Interval(float(x), float(x))
    return NotImplemented


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] with finite endpoints"""
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise DomainError(f"interval endpoints must be finite: [{lo}, {hi}]")
        if lo > hi:
            raise DomainError(f"empty interval: [{lo}, {hi}]")
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)

    @classmethod
    def point(cls, x):
        return cls(x, x)

    @classmethod
    def from_fraction(cls, fr):
        """Tightest float interval containing the rational fr"""
        fr = Fraction(fr)
        x = float(fr)
        exact = Fraction(x)
        if exact == fr:
            return cls(x, x)
        if exact > fr:
            return cls(_down(x), x)
        return cls(x, _up(x))

    @property
    def mid(self):
        return self.lo + (self.hi - self.lo) / 2

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def mag(self):
        return max(abs(self.lo), abs(self.hi))

    @property
    def mig(self):
        if self.lo <= 0.0 <= self.hi:
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    def contains(self, x):
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        if isinstance(x, Fraction):
            return Fraction(self.lo) <= x <= Fraction(self.hi)
        return self.lo <= x <= self.hi

    def subset(self, other):
        return other.contains(self)

    def hull(self, other):
        other = _as_interval(other)
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def intersect(self, other):
        other = _as_interval(other)
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            raise DomainError(f"disjoint intervals {self} and {other}")
        return Interval(lo, hi)

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __add__(self, other):
        other = _as_interval(other)
        if other is NotImplemented:
            return NotImplemented
        return iv_arith(self, other, 'add')

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_interval(other)
        if other is NotImplemented:
            return NotImplemented
        return iv_arith(self, other, 'sub')

    def __rsub__(self, other):
        other = _as_interval(other)
        if other is NotImplemented:
            return NotImplemented
        return iv_arith(other, self, 'sub')

    def __mul__(self, other):
        other = _as_interval(other)
        if other is NotImplemented:
            return NotImplemented
        return iv_arith(self, other, 'mul')

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_interval(other)
        if other is NotImplemented:
            return NotImplemented
        return iv_arith(self, other, 'div')

    def __rtruediv__(self, other):
        other = _as_interval(other)
        if other is NotImplemented:
            return NotImplemented
        return iv_arith(other, self, 'div')

    def square(self):
        """Tight enclosure of {x*x}; never negative"""
        lo2 = self.mig
        hi2 = self.mag
        return Interval(_mul_bounds(lo2, lo2)[0], _mul_bounds(hi2, hi2)[1])

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise DomainError(f"only non-negative integer powers supported, got {n}")
        if n == 0:
            return Interval(1.0, 1.0)
        if n % 2 == 0:
            return Interval(_point_pow(self.mig, n).lo, _point_pow(self.mag, n).hi)
        return Interval(_point_pow(self.lo, n).lo, _point_pow(self.hi, n).hi)

    def sqrt(self):
        return iv_sqrt(self)

    def to_json(self):
        return [self.lo, self.hi]

    def __repr__(self):
        return f"[{self.lo!r}, {self.hi!r}]"


def _point_pow(x, n):
    acc = Interval(x, x)
    for _ in range(n - 1):
        acc = acc * x
    return acc


def iv_arith(a, b, op):
    """Outward-rounded a op b for op in add, sub, mul, div"""
    if op == 'sub':
        b = Interval(-b.hi, -b.lo)
        op = 'add'
    if op == 'div' and b.lo <= 0.0 <= b.hi:
        raise DomainError(f"division by interval containing zero: {b}")
    if _backend == 'hardware':
        return Interval(*getattr(_hardware, op)(a.lo, a.hi, b.lo, b.hi))
    if op == 'add':
        return Interval(_add_bounds(a.lo, b.lo)[0], _add_bounds(a.hi, b.hi)[1])
    if op == 'mul':
        bounds = (_mul_bounds(a.lo, b.lo), _mul_bounds(a.lo, b.hi),
                  _mul_bounds(a.hi, b.lo), _mul_bounds(a.hi, b.hi))
    elif op == 'div':
        bounds = (_div_bounds(a.lo, b.lo), _div_bounds(a.lo, b.hi),
                  _div_bounds(a.hi, b.lo), _div_bounds(a.hi, b.hi))
    else:
        raise DomainError(f"unknown interval operation: {op}")
    return Interval(min(x[0] for x in bounds), max(x[1] for x in bounds))


def iv_sqrt(a):
    """Outward-rounded enclosure of {sqrt(x) : x in a}"""
    a = _as_interval(a)
    if a.lo < 0.0:
        raise DomainError(f"sqrt of interval with negative part: {a}")
    if _backend == 'hardware':
        return Interval(*_hardware.sqrt(a.lo, a.hi))
    return Interval(_sqrt_bounds(a.lo)[0], _sqrt_bounds(a.hi)[1])


@dataclass(frozen=True)
class Box:
    """Cartesian product of intervals"""
    dims: Tuple[Interval, ...]

    def __post_init__(self):
        dims = tuple(self.dims)
        if len(dims) < 1:
            raise DomainError("box needs at least one dimension")
        object.__setattr__(self, 'dims', dims)

    @classmethod
    def from_bounds(cls, bounds):
        return cls(tuple(Interval(lo, hi) for lo, hi in bounds))

    @classmethod
    def point(cls, coords):
        return cls(tuple(Interval(x, x) for x in coords))

    @property
    def n(self):
        return len(self.dims)

    def __len__(self):
        return len(self.dims)

    def __getitem__(self, i):
        return self.dims[i]

    def __iter__(self):
        return iter(self.dims)

    @property
    def lo(self):
        return np.array([d.lo for d in self.dims])

    @property
    def hi(self):
        return np.array([d.hi for d in self.dims])

    @property
    def widths(self):
        return np.array([d.width for d in self.dims])

    @property
    def width(self):
        return float(max(d.width for d in self.dims))

    def midpoint(self):
        return Box.point([d.mid for d in self.dims])

    def is_point(self):
        return all(d.lo == d.hi for d in self.dims)

    def contains(self, x):
        if isinstance(x, Box):
            return all(a.contains(b) for a, b in zip(self.dims, x.dims))
        return all(d.contains(float(v)) for d, v in zip(self.dims, x))

    def subset(self, other):
        return other.contains(self)

    def hull(self, other):
        return Box(tuple(a.hull(b) for a, b in zip(self.dims, other.dims)))

    def bisect(self, dim):
        return box_bisect(self, dim)

    def bounds(self):
        return [(d.lo, d.hi) for d in self.dims]

    def key(self):
        return tuple((d.lo, d.hi) for d in self.dims)

    def to_json(self):
        return [d.to_json() for d in self.dims]


def box_bisect(b, dim):
    """Split b at the midpoint of dims[dim]; both halves share the cut"""
    if not 0 <= dim < b.n:
        raise DomainError(f"split dimension {dim} out of range for {b.n}-dim box")
    d = b.dims[dim]
    m = d.mid
    if not d.lo < m < d.hi:
        raise DomainError(f"cannot bisect degenerate dimension {dim}: {d}")
    left = b.dims[:dim] + (Interval(d.lo, m),) + b.dims[dim + 1:]
    right = b.dims[:dim] + (Interval(m, d.hi),) + b.dims[dim + 1:]
    return Box(left), Box(right)


# Vectorized kernels on endpoint arrays. Results are always stepped one ulp
# outward; sums carry a recursive-summation error bound on top.

def vec_point(x):
    x = np.asarray(x, dtype=float)
    return x.copy(), x.copy()


def vec_add(alo, ahi, blo, bhi):
    return np.nextafter(alo + blo, -np.inf), np.nextafter(ahi + bhi, np.inf)


def vec_neg(lo, hi):
    return -hi, -lo


def vec_sub(alo, ahi, blo, bhi):
    return vec_add(alo, ahi, -bhi, -blo)


def vec_mul(alo, ahi, blo, bhi):
    p1 = alo * blo
    p2 = alo * bhi
    p3 = ahi * blo
    p4 = ahi * bhi
    lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
    hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
    return np.nextafter(lo, -np.inf), np.nextafter(hi, np.inf)


def vec_scale(c, lo, hi):
    """Interval constant c times an interval array"""
    c = _as_interval(c)
    return vec_mul(c.lo, c.hi, lo, hi)


def vec_sum(lo_terms, hi_terms, index, size, counts=None):
    """Sum interval terms into `size` bins given by `index`"""
    if counts is None:
        counts = np.bincount(index, minlength=size)
    s_lo = np.bincount(index, weights=lo_terms, minlength=size)
    s_hi = np.bincount(index, weights=hi_terms, minlength=size)
    a_lo = np.bincount(index, weights=np.abs(lo_terms), minlength=size)
    a_hi = np.bincount(index, weights=np.abs(hi_terms), minlength=size)
    gamma = np.maximum(counts - 1, 0) * (2.0 * _UNIT_ROUNDOFF)
    lo = np.nextafter(s_lo - a_lo * gamma, -np.inf)
    hi = np.nextafter(s_hi + a_hi * gamma, np.inf)
    exact = counts <= 1
    lo = np.where(exact, s_lo, lo)
    hi = np.where(exact, s_hi, hi)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise DomainError("non-finite result in interval sum")
    return lo, hi


def vec_total(lo_terms, hi_terms):
    """Sum an interval array into a single Interval"""
    lo_terms = np.atleast_1d(lo_terms)
    idx = np.zeros(lo_terms.shape[0], dtype=np.intp)
    lo, hi = vec_sum(lo_terms, np.atleast_1d(hi_terms), idx, 1)
    return Interval(lo[0], hi[0])


set_rounding_backend(config.BW_ROUNDING)
