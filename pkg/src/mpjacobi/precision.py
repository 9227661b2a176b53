"""Three-tier floating-point arithmetic: binary32, binary64, double-double.

The extended tier is double-double: a value is the unevaluated exact sum
``hi + lo`` of two binary64 numbers with ``|lo| <= 0.5 ulp(hi)``, giving an
effective unit roundoff of 2**-106. Promotion from binary64 (or binary32)
into the extended tier is exact; demotion rounds to nearest once.

``two_prod`` uses the Veltkamp/Dekker splitting rather than a fused
multiply-add (CPython 3.10 exposes none); the splitting is exact for all
inputs whose product and split do not overflow, which this library's scaled
data never approaches. Division and square root are deliberately absent
from the public surface: the pipeline only multiplies and accumulates at
extended precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .errors import DimensionError

__all__ = [
    "U_SINGLE",
    "U_DOUBLE",
    "U_DOUBLE_DOUBLE",
    "unit_roundoff",
    "two_sum",
    "two_prod",
    "DoubleDouble",
    "DDArray",
    "promote",
    "demote",
    "promote_low_to_working",
    "demote_working_to_low",
    "matmul_extended",
    "gamma_high",
]

U_SINGLE = 2.0**-24
U_DOUBLE = 2.0**-53
U_DOUBLE_DOUBLE = 2.0**-106

_SPLITTER = 134217729.0  # 2**27 + 1


def unit_roundoff(precision) -> float:
    """Unit roundoff of a precision tier.

    Accepts the string ``"dd"`` (the extended tier) or a numpy float dtype.
    """
    if isinstance(precision, str):
        if precision == "dd":
            return U_DOUBLE_DOUBLE
        raise ValueError(f"unknown precision {precision!r}")
    dt = np.dtype(precision)
    if dt == np.float32:
        return U_SINGLE
    if dt == np.float64:
        return U_DOUBLE
    raise ValueError(f"unsupported dtype {dt}")


def two_sum(a, b):
    """Error-free sum: returns (s, e) with s = fl(a+b) and s + e = a + b.

    Works elementwise on scalars or ndarrays (branch-free Knuth variant).
    """
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def _quick_two_sum(a, b):
    # requires |a| >= |b|
    s = a + b
    return s, b - (s - a)


def two_prod(a, b):
    """Error-free product: returns (p, e) with p = fl(a*b) and p + e = a*b."""
    p = a * b
    ta = _SPLITTER * a
    ahi = ta - (ta - a)
    alo = a - ahi
    tb = _SPLITTER * b
    bhi = tb - (tb - b)
    blo = b - bhi
    e = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, e


def gamma_high(n: int) -> float:
    """n*u_h / (1 - n*u_h) with u_h the extended unit roundoff."""
    x = n * U_DOUBLE_DOUBLE
    return x / (1.0 - x)


@dataclass(frozen=True)
class DoubleDouble:
    """Scalar double-double value hi + lo, kept renormalized."""

    hi: float
    lo: float = 0.0

    @staticmethod
    def from_float(x: float) -> "DoubleDouble":
        return DoubleDouble(float(x), 0.0)

    @staticmethod
    def from_sum(a: float, b: float) -> "DoubleDouble":
        s, e = two_sum(float(a), float(b))
        return DoubleDouble(s, e)

    def __post_init__(self):
        s, e = two_sum(self.hi, self.lo)
        object.__setattr__(self, "hi", s)
        object.__setattr__(self, "lo", e)

    def __add__(self, other):
        o = _as_dd(other)
        sh, sl = two_sum(self.hi, o.hi)
        th, tl = two_sum(self.lo, o.lo)
        sl += th
        sh, sl = _quick_two_sum(sh, sl)
        sl += tl
        return DoubleDouble(*_quick_two_sum(sh, sl))

    __radd__ = __add__

    def __neg__(self):
        return DoubleDouble(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-_as_dd(other))

    def __rsub__(self, other):
        return _as_dd(other) + (-self)

    def __mul__(self, other):
        o = _as_dd(other)
        ph, pl = two_prod(self.hi, o.hi)
        pl += self.hi * o.lo + self.lo * o.hi
        return DoubleDouble(*_quick_two_sum(ph, pl))

    __rmul__ = __mul__

    def __float__(self) -> float:
        return self.hi + self.lo

    def __abs__(self):
        return -self if self.hi < 0 or (self.hi == 0 and self.lo < 0) else self

    def _cmp_key(self):
        return (self.hi, self.lo)

    def __lt__(self, other):
        return self._cmp_key() < _as_dd(other)._cmp_key()

    def __le__(self, other):
        return self._cmp_key() <= _as_dd(other)._cmp_key()

    def as_fraction(self) -> Fraction:
        """Exact rational value (for oracles and decimal printing)."""
        return Fraction(self.hi) + Fraction(self.lo)


def _as_dd(x) -> DoubleDouble:
    if isinstance(x, DoubleDouble):
        return x
    return DoubleDouble(float(x), 0.0)


class DDArray:
    """Array of double-double values stored as a (hi, lo) ndarray pair."""

    __slots__ = ("hi", "lo")

    def __init__(self, hi: np.ndarray, lo: np.ndarray | None = None):
        hi = np.asarray(hi, dtype=np.float64)
        if lo is None:
            lo = np.zeros_like(hi)
        else:
            lo = np.asarray(lo, dtype=np.float64)
        if hi.shape != lo.shape:
            raise DimensionError("hi/lo shape mismatch")
        self.hi = hi
        self.lo = lo

    @property
    def shape(self):
        return self.hi.shape

    @property
    def ndim(self):
        return self.hi.ndim

    def to_float64(self) -> np.ndarray:
        """Round each entry to nearest binary64."""
        return self.hi + self.lo

    def transpose(self) -> "DDArray":
        return DDArray(self.hi.T.copy(), self.lo.T.copy())

    @property
    def T(self) -> "DDArray":
        return self.transpose()

    def copy(self) -> "DDArray":
        return DDArray(self.hi.copy(), self.lo.copy())

    def item(self, *idx) -> DoubleDouble:
        return DoubleDouble(float(self.hi[idx]), float(self.lo[idx]))

    def __getitem__(self, key) -> "DDArray":
        return DDArray(np.array(self.hi[key]), np.array(self.lo[key]))

    def __len__(self):
        return len(self.hi)

    def __repr__(self):
        return f"DDArray(shape={self.shape})"


def promote(x) -> DDArray:
    """Exact promotion of a binary32/binary64 array into the extended tier."""
    return DDArray(np.asarray(x, dtype=np.float64))


def demote(x: DDArray, dtype=np.float64) -> np.ndarray:
    """Round each extended entry to nearest in the target dtype."""
    out = x.to_float64()
    return out if np.dtype(dtype) == np.float64 else out.astype(dtype)


def promote_low_to_working(x: np.ndarray) -> np.ndarray:
    """Exact binary32 -> binary64 promotion."""
    return np.asarray(x, dtype=np.float32).astype(np.float64)


def demote_working_to_low(x: np.ndarray) -> np.ndarray:
    """Round-to-nearest binary64 -> binary32 demotion."""
    return np.asarray(x).astype(np.float32)


def matmul_extended(a: np.ndarray | DDArray, b: np.ndarray | DDArray) -> DDArray:
    """Matrix product accumulated at extended (double-double) precision.

    Inputs may be binary64 ndarrays (promoted exactly) or DDArrays. The
    entrywise error is bounded by gamma_high(k) * (|A| |B|)_ij for inner
    dimension k; accumulation order is fixed (ascending k).
    """
    a_dd = isinstance(a, DDArray)
    b_dd = isinstance(b, DDArray)
    am = a if a_dd else np.ascontiguousarray(a, dtype=np.float64)
    bm = b if b_dd else np.ascontiguousarray(b, dtype=np.float64)
    ashape = am.shape
    bshape = bm.shape
    if len(ashape) != 2 or len(bshape) != 2 or ashape[1] != bshape[0]:
        raise DimensionError(f"cannot multiply {ashape} by {bshape}")
    if a_dd or b_dd:
        ah, al = (am.hi, am.lo) if a_dd else (am, np.zeros_like(am))
        bh, bl = (bm.hi, bm.lo) if b_dd else (bm, np.zeros_like(bm))
        ph, pl = _kernels.matmul_dd_dd(
            np.ascontiguousarray(ah), np.ascontiguousarray(al),
            np.ascontiguousarray(bh), np.ascontiguousarray(bl),
        )
    else:
        ph, pl = _kernels.matmul_f_f_dd(am, bm)
    return DDArray(ph, pl)
