"""Deterministic test-matrix generation with trustworthy singular values.

Matrices with prescribed spectra are synthesized at extended precision:
Haar-distributed orthogonal factors come from the extended-precision QR of
standard Gaussian matrices (sign-fixed so diag(R) > 0), the triple product
is formed at extended precision, and the result is demoted to binary64 once.

That final demotion perturbs each entry relatively by at most u, which moves
the tiny singular values of an ill-conditioned matrix by up to about
sqrt(n) * u * kappa2D — far more than any accuracy target of this package.
``sigma_true`` therefore holds the extended-precision reference singular
values of the *stored* binary64 matrix (what any algorithm consuming the
matrix is actually asked to compute), while the prescribed spectrum is kept
in ``sigma_target`` and describes the pre-demotion product, which is also
retained in ``a_extended`` for cross-oracle checks.

Randomness comes from numpy's PCG64 generator with ziggurat normal draws:
streams are reproducible bit-for-bit for a fixed seed across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from . import _kernels
from .errors import DimensionError
from .jacobi import reference_singular_values
from .precision import DDArray, DoubleDouble

__all__ = ["GalleryMatrix", "randsvd", "kahan", "lauchli_gram",
           "rng_gaussian", "haar_orthogonal"]


@dataclass
class GalleryMatrix:
    """A test matrix, its ground-truth singular values and provenance."""

    a: np.ndarray
    sigma_true: Optional[DDArray]
    kind: str
    params: Dict = field(default_factory=dict)
    seed: int = 0
    sigma_target: Optional[np.ndarray] = None
    a_extended: Optional[DDArray] = None

    @property
    def shape(self):
        return self.a.shape


def rng_gaussian(seed: int) -> np.random.Generator:
    """Deterministic standard-normal stream (PCG64 + ziggurat)."""
    return np.random.default_rng(seed)


def haar_orthogonal(rng: np.random.Generator, m: int, n: int) -> DDArray:
    """Haar-distributed m-by-n orthonormal columns, orthogonal to ~2**-106.

    Extended-precision Householder QR of a Gaussian matrix; the sign of each
    diagonal entry of R is folded into Q so the distribution is exactly Haar.
    """
    g = rng.standard_normal((m, n))
    qh, ql, rh, _ = _kernels.qr_dd(np.ascontiguousarray(g), np.zeros((m, n)))
    signs = np.where(np.diag(rh)[:n] < 0.0, -1.0, 1.0)
    return DDArray(qh * signs, ql * signs)


def _mode_sigma(n: int, kappa: float, mode: int, rng: np.random.Generator):
    inv = 1.0 / kappa
    if mode == 1:
        s = np.full(n, inv)
        s[0] = 1.0
    elif mode == 2:
        s = np.ones(n)
        s[-1] = inv
    elif mode == 3:
        s = kappa ** (-np.arange(n) / (n - 1))
    elif mode == 4:
        s = 1.0 - (1.0 - inv) * np.arange(n) / (n - 1)
    elif mode == 5:
        s = np.exp(rng.uniform(-np.log(kappa), 0.0, size=n))
        s = np.sort(s)[::-1]
    else:
        raise ValueError(f"randsvd mode must be in 1..5, got {mode}")
    return s


def randsvd(m: int, n: int, kappa: float, mode: int, seed: int) -> GalleryMatrix:
    """Random matrix with prescribed spectrum, kappa2 ~ kappa.

    Spectrum modes: 1 = one unit value and the rest at 1/kappa, 2 = all unit
    except the last at 1/kappa, 3 = geometric, 4 = arithmetic, 5 = uniformly
    random logarithms on [-ln kappa, 0] (sorted descending).
    """
    if not (m >= n >= 2):
        raise DimensionError("require m >= n >= 2")
    if kappa < 1.0:
        raise ValueError("kappa must be >= 1")
    rng = rng_gaussian(seed)
    sigma = _mode_sigma(n, float(kappa), mode, rng)
    u = haar_orthogonal(rng, m, n)
    v = haar_orthogonal(rng, n, n)

    us_h = u.hi.copy()
    us_l = u.lo.copy()
    _kernels.scale_columns_dd(us_h, us_l, sigma, np.zeros(n))
    ph, pl = _kernels.matmul_dd_dd(
        us_h, us_l, np.ascontiguousarray(v.hi.T), np.ascontiguousarray(v.lo.T)
    )
    a_ext = DDArray(ph, pl)
    a = a_ext.to_float64()
    sigma_true = reference_singular_values(a)
    return GalleryMatrix(
        a=a,
        sigma_true=sigma_true,
        kind="randsvd",
        params={"m": m, "n": n, "kappa": float(kappa), "mode": mode},
        seed=seed,
        sigma_target=sigma,
        a_extended=a_ext,
    )


def kahan(n: int, theta: float, pert: float = 25.0) -> GalleryMatrix:
    """Upper triangular Kahan matrix, gallery convention.

    R = diag(1, s, s^2, ...) * K with K unit diagonal and -c = -cos(theta)
    above it, plus the customary diagonal perturbation
    pert * eps * diag(n, ..., 1) (pass pert=0 for the pristine matrix, whose
    condition number for theta = 1e-2 exceeds 1e100). Row scaling leaves the
    matrix well conditioned either way, which is what makes it a stress test
    for relative accuracy. Ground truth comes from the extended-precision
    reference; convergence on the clustered spectrum needs a generous sweep
    budget.
    """
    if n < 2:
        raise DimensionError("require n >= 2")
    c = np.cos(theta)
    s = np.sin(theta)
    k = np.eye(n) - c * np.triu(np.ones((n, n)), 1)
    scale = s ** np.arange(n)
    a = scale[:, None] * k
    if pert:
        a = a + pert * np.finfo(np.float64).eps * np.diag(np.arange(n, 0, -1.0))
    sigma_true = reference_singular_values(a, max_sweeps=120)
    return GalleryMatrix(
        a=a,
        sigma_true=sigma_true,
        kind="kahan",
        params={"n": n, "theta": float(theta), "pert": float(pert)},
    )


def lauchli_gram(n: int, mu: float) -> GalleryMatrix:
    """Gram matrix mu^2 I + ones, built from its closed form.

    The stored diagonal is d = fl(1 + mu^2); the exact spectrum of the
    stored matrix is therefore (n - 1 + d, d - 1, ..., d - 1), which the
    returned ``sigma_true`` evaluates in extended precision (d - 1 is exact
    by Sterbenz). kappa2 = (n + mu^2)/mu^2 up to one rounding.
    """
    if n < 2:
        raise DimensionError("require n >= 2")
    if mu <= 0.0:
        raise ValueError("mu must be positive")
    d = 1.0 + mu * mu
    a = np.ones((n, n))
    np.fill_diagonal(a, d)
    small = DoubleDouble.from_float(d - 1.0)
    big = DoubleDouble.from_sum(float(n - 1), d)
    hi = np.full(n, small.hi)
    lo = np.full(n, small.lo)
    hi[0] = big.hi
    lo[0] = big.lo
    return GalleryMatrix(
        a=a,
        sigma_true=DDArray(hi, lo),
        kind="lauchli-gram",
        params={"n": n, "mu": float(mu)},
        sigma_target=hi + lo,
    )
