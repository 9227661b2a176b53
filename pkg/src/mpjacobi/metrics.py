"""Scalar diagnostics: off quantity, (scaled) condition numbers, forward
errors, and the extended-precision reference singular values.

Condition numbers are computed through the extended-precision reference
Jacobi by default so their values stay trustworthy even for matrices whose
working-precision singular values would be meaningless. The reference
substitutes for a simulated higher precision: its relative accuracy is about
sqrt(m n) * 2**-106 * kappa2D of the (scaled) input, which is negligible at
every tolerance asserted in this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import DimensionError, RankDeficientError, ZeroColumnError
from .jacobi import JacobiOptions, one_sided_jacobi, reference_singular_values
from .precision import DDArray, U_DOUBLE_DOUBLE

__all__ = [
    "off_quantity",
    "kappa2",
    "kappa2_scaled",
    "ErrorReport",
    "forward_errors",
    "reference_svd",
    "accuracy_bound",
]

_RANK_DEFICIENT_FACTOR = 10.0


def off_quantity(g) -> float:
    """Frobenius norm of the off-diagonal part of a square matrix."""
    if isinstance(g, DDArray):
        g = g.to_float64()
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise DimensionError("off is defined for square matrices")
    od = g - np.diag(np.diag(g))
    return float(np.sqrt(np.sum(od**2)))


def reference_svd(a, max_sweeps: int = 60) -> DDArray:
    """Extended-precision (double-double) reference singular values.

    ``a`` may be a binary64 ndarray or a DDArray (e.g. an extended-precision
    product whose exact factor never existed at working precision).
    """
    return reference_singular_values(a, max_sweeps=max_sweeps)


def _sigma_ratio(sigma: DDArray) -> float:
    smax = float(sigma.hi[0])
    smin = float(sigma.hi[-1] + sigma.lo[-1])
    if smin <= _RANK_DEFICIENT_FACTOR * smax * U_DOUBLE_DOUBLE:
        raise RankDeficientError(
            "smallest singular value is below the trust threshold "
            f"({smin:.3e} vs sigma_max {smax:.3e})"
        )
    return smax / smin


def kappa2(a, *, precision: str = "extended") -> float:
    """Condition number sigma_max / sigma_min.

    ``precision="extended"`` (default) uses the dd reference Jacobi;
    ``"working"`` uses the binary64 kernel, adequate only when
    u * kappa2D is far below the accuracy needed.
    """
    if precision == "extended":
        return _sigma_ratio(reference_svd(a))
    res = one_sided_jacobi(np.asarray(a, dtype=np.float64),
                           JacobiOptions(accumulate_v=False))
    smin = float(res.sigma[-1])
    if smin <= _RANK_DEFICIENT_FACTOR * float(res.sigma[0]) * U_DOUBLE_DOUBLE:
        raise RankDeficientError("matrix is numerically rank deficient")
    return float(res.sigma[0]) / smin


def kappa2_scaled(a, *, precision: str = "extended") -> float:
    """One-sided scaled condition number kappa2(A D), D = diag(1/||a_j||).

    Column normalization happens in the precision of the computation, so a
    DDArray input is normalized at extended precision.
    """
    if isinstance(a, DDArray):
        ah = np.ascontiguousarray(a.hi).copy()
        al = np.ascontiguousarray(a.lo).copy()
    else:
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise DimensionError("expected a 2-d matrix")
        ah = np.ascontiguousarray(a).copy()
        al = np.zeros_like(ah)
    if np.any(np.max(np.abs(ah) + np.abs(al), axis=0) == 0.0):
        raise ZeroColumnError("scaled condition number needs nonzero columns")
    if precision == "extended":
        n2h, n2l = _kernels.colnorms2_dd(ah, al)
        n = ah.shape[1]
        dh = np.empty(n)
        dl = np.empty(n)
        for j in range(n):
            sh, sl = _kernels._dd_sqrt(n2h[j], n2l[j])
            dh[j], dl[j] = _kernels._dd_recip(sh, sl)
        _kernels.scale_columns_dd(ah, al, dh, dl)
        return _sigma_ratio(reference_svd(DDArray(ah, al)))
    work = ah + al
    norms = np.sqrt(np.sum(work**2, axis=0))
    res = one_sided_jacobi(work / norms, JacobiOptions(accumulate_v=False))
    smin = float(res.sigma[-1])
    if smin == 0.0:
        raise RankDeficientError("matrix is numerically rank deficient")
    return float(res.sigma[0]) / smin


@dataclass
class ErrorReport:
    """Per-singular-value relative forward errors plus the accuracy bound."""

    per_k_forward_error: np.ndarray
    max_forward_error: float
    bound_value: Optional[float] = None
    bound_satisfied: Optional[bool] = None
    truth_source: str = "unspecified"


def _truth_hi_lo(sigma_true) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(sigma_true, DDArray):
        return sigma_true.hi, sigma_true.lo
    arr = np.asarray(sigma_true, dtype=np.float64)
    return arr, np.zeros_like(arr)


def forward_errors(
    sigma_computed: Sequence[float],
    sigma_true,
    *,
    bound_value: Optional[float] = None,
    truth_source: str = "unspecified",
) -> ErrorReport:
    """Relative forward error of each (descending) singular value.

    ``sigma_true`` may carry extended precision; the difference is then
    formed against the full hi+lo value so true errors below 2**-53 are
    still resolved.
    """
    sc = np.asarray(sigma_computed, dtype=np.float64)
    th, tl = _truth_hi_lo(sigma_true)
    if sc.shape != th.shape:
        raise DimensionError("computed and true sigma lengths differ")
    if np.any(th <= 0.0):
        raise ValueError("true singular values must be positive")
    err = np.abs((sc - th) - tl) / th
    max_err = float(np.max(err)) if err.size else 0.0
    satisfied = None if bound_value is None else bool(max_err <= bound_value)
    return ErrorReport(
        per_k_forward_error=err,
        max_forward_error=max_err,
        bound_value=bound_value,
        bound_satisfied=satisfied,
        truth_source=truth_source,
    )


def accuracy_bound(m: int, n: int, u: float, kappa2d: float) -> float:
    """n*u + sqrt(m*n) * u * kappa2d, the asserted forward-error envelope."""
    return n * u + math.sqrt(m * n) * u * kappa2d
