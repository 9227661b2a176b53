"""One-sided Jacobi SVD with the Demmel-Veselic relative stopping criterion.

The kernel runs cyclic-by-rows sweeps over column pairs (p, q), p < q, and
rotates a pair only while |a_p . a_q| > tol * ||a_p|| * ||a_q||. Because the
criterion is relative, the rotation sequence is invariant under scaling of
the input. Column norms are recomputed from scratch at the start of every
sweep; accuracy is preferred over incremental updates throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .errors import DimensionError, NonConvergenceError, ZeroColumnError
from .precision import DDArray, U_DOUBLE_DOUBLE, unit_roundoff

__all__ = ["JacobiOptions", "SvdResult", "jacobi_rotation", "one_sided_jacobi",
           "reference_singular_values"]


@dataclass(frozen=True)
class JacobiOptions:
    """Options for the one-sided Jacobi kernel.

    ``tol=None`` selects the default sqrt(m) * u of the active precision.
    """

    tol: Optional[float] = None
    max_sweeps: int = 30
    accumulate_v: bool = True
    sort_descending: bool = True

    def __post_init__(self):
        if self.tol is not None and not (0.0 < self.tol < 1.0):
            raise ValueError("tol must lie in (0, 1)")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be >= 1")

    def resolve_tol(self, m: int, dtype) -> float:
        if self.tol is not None:
            return self.tol
        return math.sqrt(m) * unit_roundoff(dtype)


@dataclass
class SvdResult:
    """Computed SVD with convergence diagnostics.

    ``sigma`` is sorted descending; ``converged`` is True iff some full
    sweep performed zero rotations within the sweep budget (that verification
    sweep is included in ``sweeps``).
    """

    u: np.ndarray
    sigma: np.ndarray
    v: Optional[np.ndarray]
    sweeps: int
    rotations: int
    converged: bool
    stop_reason: str = field(default="converged")


def jacobi_rotation(gpp: float, gqq: float, gpq: float):
    """Rotation (cs, sn) diagonalizing the symmetric block [[gpp,gpq],[gpq,gqq]].

    Uses the smaller-angle root: tau = (gqq-gpp)/(2 gpq),
    t = sign(tau)/(|tau| + sqrt(1+tau^2)), cs = 1/sqrt(1+t^2), sn = t*cs.
    """
    if not (math.isfinite(gpp) and math.isfinite(gqq) and math.isfinite(gpq)):
        raise ValueError("rotation inputs must be finite")
    tau = (gqq - gpp) / (2.0 * gpq)
    if math.isfinite(tau):
        t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
    else:
        t = 0.0
    cs = 1.0 / math.sqrt(1.0 + t * t)
    sn = t * cs
    return cs, sn


def _check_no_zero_column(a: np.ndarray):
    if np.any(np.max(np.abs(a), axis=0) == 0):
        raise ZeroColumnError("input has an all-zero column")


def _scaled_column_norms(a: np.ndarray) -> np.ndarray:
    scale = np.max(np.abs(a), axis=0)
    scale[scale == 0.0] = 1.0
    return scale * np.sqrt(np.sum((a / scale) ** 2, axis=0))


def one_sided_jacobi(a: np.ndarray, opts: JacobiOptions | None = None) -> SvdResult:
    """One-sided Jacobi SVD of a binary32 or binary64 matrix with m >= n.

    All arithmetic on the matrix runs in its own dtype; rotation angles are
    formed in binary64 and rounded on store. On sweep exhaustion the partial
    result is returned with ``converged=False`` (callers decide severity).
    """
    opts = opts or JacobiOptions()
    a = np.asarray(a)
    if a.ndim != 2:
        raise DimensionError("expected a 2-d matrix")
    if a.dtype not in (np.float32, np.float64):
        raise DimensionError(f"unsupported dtype {a.dtype}")
    m, n = a.shape
    if m < n or n < 1:
        raise DimensionError("require rows >= cols >= 1")
    _check_no_zero_column(a)

    dtype = a.dtype
    work = np.asfortranarray(a, dtype=dtype).copy(order="F")
    if opts.accumulate_v:
        v = np.asfortranarray(np.eye(n, dtype=dtype))
    else:
        v = np.zeros((0, 0), dtype=dtype, order="F")
    tol = opts.resolve_tol(m, dtype)
    sweeps, rotations, converged = _kernels.jacobi_sweeps_dense(
        work, v, opts.accumulate_v, tol, opts.max_sweeps, dtype.type(0.0)
    )

    sigma = _scaled_column_norms(work.astype(np.float64, copy=False))
    u = np.array(work, dtype=dtype)
    safe = np.where(sigma == 0.0, 1.0, sigma)
    u /= safe.astype(dtype)

    vmat = np.array(v) if opts.accumulate_v else None
    if opts.sort_descending:
        order = np.argsort(-sigma, kind="stable")
        sigma = sigma[order]
        u = u[:, order]
        if vmat is not None:
            vmat = vmat[:, order]
    return SvdResult(
        u=u,
        sigma=sigma,
        v=vmat,
        sweeps=int(sweeps),
        rotations=int(rotations),
        converged=bool(converged),
        stop_reason="converged" if converged else "max_sweeps",
    )


def reference_singular_values(
    a: np.ndarray | DDArray,
    tol: Optional[float] = None,
    max_sweeps: int = 60,
) -> DDArray:
    """Singular values by one-sided Jacobi run at extended (dd) precision.

    Accepts a binary64 matrix (promoted exactly) or a DDArray. Returns the
    descending singular values as a DDArray. Raises NonConvergenceError if
    the sweep budget is exhausted: a reference value must be trustworthy.
    """
    if isinstance(a, DDArray):
        ah = np.ascontiguousarray(a.hi).copy()
        al = np.ascontiguousarray(a.lo).copy()
    else:
        a = np.asarray(a, dtype=np.float64)
        ah = np.ascontiguousarray(a).copy()
        al = np.zeros_like(ah)
    if ah.ndim != 2:
        raise DimensionError("expected a 2-d matrix")
    m, n = ah.shape
    if m < n:
        raise DimensionError("require rows >= cols")
    if np.any(np.max(np.abs(ah) + np.abs(al), axis=0) == 0):
        raise ZeroColumnError("input has an all-zero column")
    if tol is None:
        tol = math.sqrt(m) * U_DOUBLE_DOUBLE
    sweeps, _, converged = _kernels.jacobi_sweeps_dd(ah, al, tol, max_sweeps)
    if not converged:
        raise NonConvergenceError(
            f"extended-precision Jacobi did not converge in {max_sweeps} sweeps"
        )
    n2h, n2l = _kernels.colnorms2_dd(ah, al)
    sh = np.empty(n)
    sl = np.empty(n)
    for j in range(n):
        sh[j], sl[j] = _kernels._dd_sqrt(n2h[j], n2l[j])
    order = np.argsort(-sh, kind="stable")
    return DDArray(sh[order], sl[order])
