"""End-to-end mixed-precision preconditioned one-sided Jacobi SVD.

Pipeline: build the preconditioner from low-precision singular vector
information, multiply A by it at high precision and demote once, optionally
QR-reduce tall products, run one-sided Jacobi at working precision, and
compose the right singular vectors at working precision.

The QR reduction happens strictly *after* preconditioning: reducing first
would make the forward error scale with the scaled condition number of the
original matrix instead of the preconditioned one. A ``qr_before_precond``
flag exists purely as a negative control for experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import _kernels
from .errors import DimensionError
from .jacobi import JacobiOptions, SvdResult, one_sided_jacobi
from .linalg import householder_qr
from .precision import DDArray, matmul_extended, unit_roundoff
from .precond import (
    BIDIAG_METHOD,
    ORTH_METHOD,
    Preconditioner,
    precond_bidiag_method,
    precond_orth_method,
)

__all__ = ["PrecisionConfig", "SDQ", "SSD", "get_config", "Mp3Diagnostics",
           "mp3_svd", "plain_jacobi_svd", "QR_ROW_FACTOR"]

QR_ROW_FACTOR = 11.0 / 6.0


@dataclass(frozen=True)
class PrecisionConfig:
    """A (low, working, high) precision triple.

    ``high`` is either the string "dd" (double-double) or a numpy dtype.
    The unit roundoffs must satisfy u_high < u_working <= u_low.
    """

    name: str
    low: type
    working: type
    high: object

    def __post_init__(self):
        ul = unit_roundoff(self.low)
        uw = unit_roundoff(self.working)
        uh = unit_roundoff(self.high)
        if not (uh < uw <= ul):
            raise ValueError("need u_high < u_working <= u_low")

    @property
    def u_low(self) -> float:
        return unit_roundoff(self.low)

    @property
    def u_working(self) -> float:
        return unit_roundoff(self.working)

    @property
    def u_high(self) -> float:
        return unit_roundoff(self.high)


SDQ = PrecisionConfig("sdq", np.float32, np.float64, "dd")
SSD = PrecisionConfig("ssd", np.float32, np.float32, np.float64)

_CONFIGS = {c.name: c for c in (SDQ, SSD)}


def get_config(name: str) -> PrecisionConfig:
    try:
        return _CONFIGS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown precision config {name!r}; "
                         f"choose from {sorted(_CONFIGS)}") from None


@dataclass
class Mp3Diagnostics:
    """Diagnostics of one mixed-precision preconditioned factorization.

    ``off_after <= off_before`` is the expected signature of successful
    preconditioning, reported but never asserted. The assumption flags are
    advisory: they use the run's own computed singular values as the
    condition-number estimate.
    """

    orth_residual: float
    off_before: float
    off_after: float
    obliq_after: float
    kappa2d_before: float
    kappa2d_after: float
    used_qr: bool
    jacobi_sweeps: int
    jacobi_rotations: int
    assumption_flags: Tuple[bool, bool, bool]
    method: str = ORTH_METHOD
    config: str = "sdq"
    low_converged: bool = True
    a_tilde_high: Optional[object] = None  # DDArray or binary64 ndarray


def _high_product(a_w: np.ndarray, v: np.ndarray, cfg: PrecisionConfig):
    """A @ V at high precision; returns (high_object, demoted_working)."""
    if cfg.high == "dd":
        prod = matmul_extended(np.asarray(a_w, dtype=np.float64),
                               np.asarray(v, dtype=np.float64))
        return prod, prod.to_float64().astype(cfg.working)
    # binary64 high tier: promotion is exact, fixed-order accumulation
    prod = _kernels.matmul_f64(
        np.ascontiguousarray(a_w, dtype=np.float64),
        np.ascontiguousarray(v, dtype=np.float64),
    )
    return prod, prod.astype(cfg.working)


def _off_f64(a: np.ndarray) -> float:
    g = a.T @ a
    od = g - np.diag(np.diag(g))
    return float(np.sqrt(np.sum(od**2)))


def _scaled_spectrum_stats(a: np.ndarray, opts: JacobiOptions):
    """(kappa2d, obliquity) of a from one Jacobi run on its normalized columns."""
    a = np.asarray(a, dtype=np.float64)
    norms = np.sqrt(np.sum(a**2, axis=0))
    if np.any(norms == 0.0):
        return math.nan, math.nan
    res = one_sided_jacobi(a / norms, JacobiOptions(
        max_sweeps=opts.max_sweeps, accumulate_v=False))
    smin = float(res.sigma[-1])
    k2d = math.inf if smin == 0.0 else float(res.sigma[0]) / smin
    return k2d, float(np.max(np.abs(res.sigma - 1.0)))


def mp3_svd(
    a: np.ndarray,
    cfg: PrecisionConfig = SDQ,
    method: str = ORTH_METHOD,
    opts: JacobiOptions | None = None,
    use_qr: Optional[bool] = None,
    qr_threshold: float = QR_ROW_FACTOR,
    qr_before_precond: bool = False,
    diagnostics: str = "full",
) -> Tuple[SvdResult, Mp3Diagnostics]:
    """Mixed-precision preconditioned one-sided Jacobi SVD.

    ``use_qr=None`` applies the QR reduction whenever m >= qr_threshold * n.
    ``diagnostics="light"`` skips the working-precision estimate of the
    scaled condition number of the input (the one expensive diagnostic).
    Non-convergence anywhere is reported through the result and diagnostics
    rather than raised, so experiment sweeps never lose a row.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] < a.shape[1] or a.shape[1] < 1:
        raise DimensionError("require a 2-d matrix with rows >= cols >= 1")
    if not np.all(np.isfinite(a)):
        raise ValueError("input must be finite")
    opts = opts or JacobiOptions()
    a_w = a.astype(cfg.working)
    m, n = a_w.shape

    q_pre = None
    if qr_before_precond:
        # negative control: reduce first, precondition the triangular factor
        qr0 = householder_qr(a_w)
        q_pre, a_w = qr0.q, qr0.r
        m = n

    if method == ORTH_METHOD:
        pre = precond_orth_method(a_w, low_dtype=cfg.low,
                                  working_dtype=cfg.working)
    elif method == BIDIAG_METHOD:
        pre = precond_bidiag_method(a_w, low_dtype=cfg.low,
                                    working_dtype=cfg.working)
    else:
        raise ValueError(f"unknown preconditioner method {method!r}")

    a_high, at_comp = _high_product(a_w, pre.v_tilde, cfg)

    trigger = use_qr if use_qr is not None else (m >= qr_threshold * n)
    if trigger:
        qr = householder_qr(at_comp)
        res_j = one_sided_jacobi(qr.r, opts)
        u = (qr.q @ res_j.u).astype(cfg.working)
    else:
        res_j = one_sided_jacobi(at_comp, opts)
        u = res_j.u
    v = (pre.v_tilde.astype(cfg.working) @ res_j.v).astype(cfg.working) \
        if res_j.v is not None else None
    if q_pre is not None:
        u = (q_pre @ u).astype(cfg.working)

    result = SvdResult(
        u=u,
        sigma=res_j.sigma,
        v=v,
        sweeps=res_j.sweeps,
        rotations=res_j.rotations,
        converged=res_j.converged and pre.low_converged,
        stop_reason=res_j.stop_reason,
    )

    at64 = at_comp.astype(np.float64)
    k2d_after, obliq_after = _scaled_spectrum_stats(at64, opts)
    if diagnostics == "full":
        k2d_before, _ = _scaled_spectrum_stats(a_w.astype(np.float64), opts)
    else:
        k2d_before = math.nan

    u_w = cfg.u_working
    u_h = cfg.u_high
    p1u = n * u_w
    smin = float(result.sigma[-1])
    kappa_est = math.inf if smin == 0.0 else float(result.sigma[0]) / smin
    gamma_h = n * u_h / (1.0 - n * u_h)
    a1 = p1u < 1.0 and 6.0 * n * u_w / (1.0 - p1u) * kappa_est < 1.0
    a2 = p1u < 1.0 and gamma_h < (1.0 - p1u) * u_w / (4.0 * (1.0 + p1u) * kappa_est)
    a3 = (4.0 * math.sqrt(m) * u_w < 1.0
          and 16.0 * m * math.sqrt(n) * u_w * k2d_after < 1.0)

    diag = Mp3Diagnostics(
        orth_residual=pre.orth_residual,
        off_before=_off_f64(a_w.astype(np.float64)),
        off_after=_off_f64(at64),
        obliq_after=obliq_after,
        kappa2d_before=k2d_before,
        kappa2d_after=k2d_after,
        used_qr=bool(trigger),
        jacobi_sweeps=res_j.sweeps,
        jacobi_rotations=res_j.rotations,
        assumption_flags=(bool(a1), bool(a2), bool(a3)),
        method=method,
        config=cfg.name,
        low_converged=pre.low_converged,
        a_tilde_high=a_high,
    )
    return result, diag


def plain_jacobi_svd(
    a: np.ndarray,
    opts: JacobiOptions | None = None,
    use_qr: Optional[bool] = None,
    qr_threshold: float = QR_ROW_FACTOR,
) -> SvdResult:
    """Unpreconditioned one-sided Jacobi baseline.

    Applies the same tall-matrix QR reduction rule as the preconditioned
    pipeline (``use_qr=None`` = automatic) so sweep counts compare like for
    like.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] < a.shape[1]:
        raise DimensionError("require rows >= cols")
    dtype = a.dtype if a.dtype in (np.float32, np.float64) else np.float64
    a = a.astype(dtype)
    m, n = a.shape
    opts = opts or JacobiOptions()
    trigger = use_qr if use_qr is not None else (m >= qr_threshold * n)
    if not trigger:
        return one_sided_jacobi(a, opts)
    qr = householder_qr(a)
    res = one_sided_jacobi(qr.r, opts)
    res.u = (qr.q @ res.u).astype(dtype)
    return res
