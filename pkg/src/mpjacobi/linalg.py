"""Precision-generic dense kernels: column norms, Householder QR,
Householder bidiagonalization with stored right-side reflectors, and a
spectral-norm estimate.

Every routine preserves the dtype of its input (binary32 in, binary32 out),
which is what lets the same code serve the low, working and SSD
configurations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .errors import DimensionError
from .jacobi import JacobiOptions, one_sided_jacobi

__all__ = [
    "column_norms",
    "HouseholderSeq",
    "QrFactors",
    "householder_qr",
    "bidiagonalize",
    "apply_householder_seq",
    "spectral_norm",
]

_SMALL_JACOBI_DIM = 32
_POWER_TOL = 1e-6
_POWER_MAXIT = 500


def column_norms(a: np.ndarray) -> np.ndarray:
    """2-norm of each column, scaled to avoid overflow/underflow."""
    a = np.asarray(a)
    if a.ndim != 2:
        raise DimensionError("expected a 2-d matrix")
    # column-contiguous so each column reduces in the same order regardless
    # of how the caller sliced the input (keeps norms permutation-equivariant
    # bit for bit)
    work = np.asfortranarray(a, dtype=np.float64)
    scale = np.max(np.abs(work), axis=0)
    safe = np.where(scale == 0.0, 1.0, scale)
    return scale * np.sqrt(np.sum((work / safe) ** 2, axis=0))


@dataclass
class HouseholderSeq:
    """Sequence of Householder reflectors H = I - beta v v^T.

    Each vector is stored with unit leading entry together with the beta of
    its native precision. ``apply_householder_seq`` recomputes beta in the
    application precision so the composed product stays orthogonal to O(u)
    even when the vectors were built at a lower precision.
    """

    vectors: List[Tuple[int, np.ndarray, float]] = field(default_factory=list)
    side: str = "right"
    dim: int = 0

    def __len__(self):
        return len(self.vectors)


@dataclass
class QrFactors:
    q: np.ndarray
    r: np.ndarray


def _reflector(x: np.ndarray):
    """Unit-leading Householder vector and beta annihilating x[1:].

    Sign is chosen to avoid cancellation: the pivot maps to
    -sign(x[0]) * ||x||. A zero tail yields beta = 0 (H = I), so inputs
    that are already reduced pass through untouched.
    """
    dtype = x.dtype
    v = np.zeros_like(x)
    v[0] = 1.0
    if x.shape[0] == 1 or not np.any(x[1:]):
        return v, dtype.type(0.0), float(x[0])
    norm = column_norms(x.reshape(-1, 1))[0]
    alpha = -math.copysign(norm, float(x[0]) if x[0] != 0 else 1.0)
    v = np.array(x, dtype=dtype)
    v0 = v[0] - dtype.type(alpha)
    v /= v0
    v[0] = 1.0
    beta = dtype.type(2.0) / np.dot(v, v)
    return v, beta, alpha


def householder_qr(a: np.ndarray) -> QrFactors:
    """Householder QR with explicit reduced Q and diag(R) >= 0.

    Columnwise backward error is O(m n u); Q is numerically orthonormal.
    Rank deficiency is allowed (R may have zero diagonal entries).
    """
    a = np.asarray(a)
    if a.ndim != 2:
        raise DimensionError("expected a 2-d matrix")
    m, n = a.shape
    if m < n:
        raise DimensionError("require rows >= cols")
    dtype = a.dtype if a.dtype in (np.float32, np.float64) else np.float64
    r = np.array(a, dtype=dtype)
    refl = []
    for j in range(n):
        v, beta, alpha = _reflector(r[j:, j])
        if beta != 0.0:
            w = beta * (v @ r[j:, j:])
            r[j:, j:] -= np.outer(v, w)
        r[j, j] = alpha if beta != 0.0 else r[j, j]
        r[j + 1:, j] = 0.0
        refl.append((j, v, beta))

    q = np.zeros((m, n), dtype=dtype)
    np.fill_diagonal(q, 1.0)
    for j, v, beta in reversed(refl):
        if beta == 0.0:
            continue
        w = beta * (v @ q[j:, :])
        q[j:, :] -= np.outer(v, w)

    signs = np.where(np.diag(r[:n, :n]) < 0, -1.0, 1.0).astype(dtype)
    q *= signs
    r = (r[:n, :n].T * signs).T
    return QrFactors(q=q, r=np.triu(r))


def bidiagonalize(a: np.ndarray, keep_left: bool = False):
    """Householder bidiagonalization B = U^T A V, storing right reflectors.

    Left reflectors are applied and discarded unless ``keep_left`` (a debug
    mode for reconstruction tests): only the right singular vectors are
    needed downstream. Returns (B, right_seq) or (B, right_seq, left_seq).
    B is the leading n-by-n upper bidiagonal block; the right sequence has
    n - 2 reflectors (none for n = 2). For n = 1 the result is the column
    norm.
    """
    a = np.asarray(a)
    if a.ndim != 2:
        raise DimensionError("expected a 2-d matrix")
    m, n = a.shape
    if m < n:
        raise DimensionError("require rows >= cols")
    dtype = a.dtype if a.dtype in (np.float32, np.float64) else np.float64
    work = np.array(a, dtype=dtype)
    right = HouseholderSeq(side="right", dim=n)
    left = HouseholderSeq(side="left", dim=m) if keep_left else None

    if n == 1:
        b = np.zeros((1, 1), dtype=dtype)
        b[0, 0] = dtype.type(column_norms(work)[0])
        return (b, right, left) if keep_left else (b, right)

    for j in range(n):
        v, beta, alpha = _reflector(work[j:, j])
        if beta != 0.0:
            w = beta * (v @ work[j:, j:])
            work[j:, j:] -= np.outer(v, w)
            work[j, j] = alpha
            work[j + 1:, j] = 0.0
        if keep_left:
            left.vectors.append((j, v, float(beta)))
        if j < n - 2:
            vr, br, ar = _reflector(work[j, j + 1:])
            if br != 0.0:
                w = br * (work[j:, j + 1:] @ vr)
                work[j:, j + 1:] -= np.outer(w, vr)
                work[j, j + 1] = ar
                work[j, j + 2:] = 0.0
            right.vectors.append((j + 1, vr, float(br)))

    b = np.triu(np.tril(work[:n, :n], 1))
    return (b, right, left) if keep_left else (b, right)


def apply_householder_seq(seq: HouseholderSeq, x: np.ndarray) -> np.ndarray:
    """Product (H_0 H_1 ... H_k) X in the precision of X.

    H_0 is the first stored reflector, so the last stored reflector touches
    X first. Reflector vectors are promoted exactly; each beta is recomputed
    from the promoted vector so orthogonality holds at the precision of X.
    """
    x = np.asarray(x)
    if x.ndim != 2:
        raise DimensionError("expected a 2-d matrix")
    dtype = x.dtype if x.dtype in (np.float32, np.float64) else np.float64
    out = np.array(x, dtype=dtype)
    if seq.dim and out.shape[0] != seq.dim:
        raise DimensionError(
            f"sequence acts on dimension {seq.dim}, got {out.shape[0]}"
        )
    for off, v, beta_stored in reversed(seq.vectors):
        if beta_stored == 0.0:  # identity reflector (tail was already zero)
            continue
        vv = v.astype(dtype)
        beta = dtype.type(2.0) / np.dot(vv, vv)
        w = beta * (vv @ out[off:, :])
        out[off:, :] -= np.outer(vv, w)
    return out


def spectral_norm(a: np.ndarray) -> float:
    """Largest singular value.

    Small matrices go through the Jacobi kernel; otherwise power iteration
    on A^T A with relative tolerance 1e-6 and a 500-iteration cap.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError("expected a 2-d matrix")
    if not np.any(a):
        return 0.0
    m, n = a.shape
    if n > m:
        a = a.T
        m, n = a.shape
    if np.any(np.max(np.abs(a), axis=0) == 0.0):
        keep = np.max(np.abs(a), axis=0) > 0.0
        a = a[:, keep]
        n = a.shape[1]
        if n == 0:
            return 0.0
    if n <= _SMALL_JACOBI_DIM:
        res = one_sided_jacobi(a, JacobiOptions(accumulate_v=False))
        return float(res.sigma[0])

    x = np.ones(n) / math.sqrt(n)
    x += 1e-3 * np.cos(np.arange(n))  # deterministic symmetry breaker
    x /= np.linalg.norm(x)
    prev = 0.0
    for _ in range(_POWER_MAXIT):
        y = a.T @ (a @ x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        est = math.sqrt(ny)
        if abs(est - prev) <= _POWER_TOL * est:
            return est
        prev = est
    return prev
