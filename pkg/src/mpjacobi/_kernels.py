"""Numba-compiled inner loops.

Everything here is private. The double-double (dd) helpers represent a real
number as an unevaluated sum hi + lo of two binary64 values, giving an
effective unit roundoff of 2**-106. Products are made exact with the
Veltkamp/Dekker splitting because the interpreter exposes no fused
multiply-add. Reciprocal and reciprocal-square-root refinements use one
Newton step from a binary64 seed, which needs only dd additions and
multiplications.

All kernels are deterministic: accumulation is in a fixed (ascending) order
and no fastmath transformations are enabled.
"""

import math

import numpy as np
from numba import njit

_SPLITTER = 134217729.0  # 2**27 + 1

_JIT = dict(cache=True, nogil=True)


# ---------------------------------------------------------------------------
# scalar error-free transformations and dd arithmetic


@njit(inline="always", **_JIT)
def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


@njit(inline="always", **_JIT)
def _quick_two_sum(a, b):
    # requires |a| >= |b| (or a == 0)
    s = a + b
    err = b - (s - a)
    return s, err


@njit(inline="always", **_JIT)
def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    lo = a - hi
    return hi, lo


@njit(inline="always", **_JIT)
def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


@njit(inline="always", **_JIT)
def _dd_add(xh, xl, yh, yl):
    sh, sl = _two_sum(xh, yh)
    th, tl = _two_sum(xl, yl)
    sl += th
    sh, sl = _quick_two_sum(sh, sl)
    sl += tl
    return _quick_two_sum(sh, sl)


@njit(inline="always", **_JIT)
def _dd_add_f(xh, xl, y):
    sh, sl = _two_sum(xh, y)
    sl += xl
    return _quick_two_sum(sh, sl)


@njit(inline="always", **_JIT)
def _dd_mul(xh, xl, yh, yl):
    ph, pl = _two_prod(xh, yh)
    pl += xh * yl + xl * yh
    return _quick_two_sum(ph, pl)


@njit(inline="always", **_JIT)
def _dd_mul_f(xh, xl, y):
    ph, pl = _two_prod(xh, y)
    pl += xl * y
    return _quick_two_sum(ph, pl)


@njit(inline="always", **_JIT)
def _dd_neg(xh, xl):
    return -xh, -xl


@njit(inline="always", **_JIT)
def _dd_recip(xh, xl):
    # Newton step r <- r + r*(1 - x*r) from a binary64 seed.
    r0 = 1.0 / xh
    th, tl = _dd_mul_f(xh, xl, r0)
    eh, el = _dd_add_f(-th, -tl, 1.0)
    ch, cl = _dd_mul_f(eh, el, r0)
    return _dd_add_f(ch, cl, r0)


@njit(inline="always", **_JIT)
def _dd_rsqrt(xh, xl):
    # Newton step r <- r + r*(1 - x*r*r)/2 from a binary64 seed.
    r0 = 1.0 / math.sqrt(xh)
    sh, sl = _two_prod(r0, r0)
    th, tl = _dd_mul(xh, xl, sh, sl)
    eh, el = _dd_add_f(-th, -tl, 1.0)
    eh *= 0.5
    el *= 0.5
    ch, cl = _dd_mul_f(eh, el, r0)
    return _dd_add_f(ch, cl, r0)


@njit(inline="always", **_JIT)
def _dd_sqrt(xh, xl):
    # sqrt(x) = x * rsqrt(x); avoids a dd division.
    if xh == 0.0:
        return 0.0, 0.0
    rh, rl = _dd_rsqrt(xh, xl)
    return _dd_mul(xh, xl, rh, rl)


# ---------------------------------------------------------------------------
# extended-precision matrix products (fixed ascending-k accumulation)


@njit(**_JIT)
def matmul_f_f_dd(a, b):
    """Product of two binary64 matrices accumulated in dd."""
    m, k = a.shape
    n = b.shape[1]
    ph = np.empty((m, n))
    pl = np.empty((m, n))
    for j in range(n):
        for i in range(m):
            sh = 0.0
            sl = 0.0
            for t in range(k):
                h, l = _two_prod(a[i, t], b[t, j])
                sh, sl = _dd_add(sh, sl, h, l)
            ph[i, j] = sh
            pl[i, j] = sl
    return ph, pl


@njit(**_JIT)
def matmul_dd_dd(ah, al, bh, bl):
    """Product of two dd matrices accumulated in dd."""
    m, k = ah.shape
    n = bh.shape[1]
    ph = np.empty((m, n))
    pl = np.empty((m, n))
    for j in range(n):
        for i in range(m):
            sh = 0.0
            sl = 0.0
            for t in range(k):
                h, l = _dd_mul(ah[i, t], al[i, t], bh[t, j], bl[t, j])
                sh, sl = _dd_add(sh, sl, h, l)
            ph[i, j] = sh
            pl[i, j] = sl
    return ph, pl


@njit(**_JIT)
def matmul_f64(a, b):
    """Plain binary64 product with the same fixed accumulation order."""
    m, k = a.shape
    n = b.shape[1]
    p = np.empty((m, n))
    for j in range(n):
        for i in range(m):
            s = 0.0
            for t in range(k):
                s += a[i, t] * b[t, j]
            p[i, j] = s
    return p


@njit(**_JIT)
def gram_dd(ah, al):
    """G = A^T A of a dd matrix, in dd."""
    m, n = ah.shape
    gh = np.empty((n, n))
    gl = np.empty((n, n))
    for j in range(n):
        for i in range(j + 1):
            sh = 0.0
            sl = 0.0
            for t in range(m):
                h, l = _dd_mul(ah[t, i], al[t, i], ah[t, j], al[t, j])
                sh, sl = _dd_add(sh, sl, h, l)
            gh[i, j] = sh
            gl[i, j] = sl
            gh[j, i] = sh
            gl[j, i] = sl
    return gh, gl


# ---------------------------------------------------------------------------
# dd Householder QR (used to synthesize near-exactly orthogonal factors)


@njit(**_JIT)
def qr_dd(ah, al):
    """Reduced Householder QR of a dd matrix.

    Returns (qh, ql, rh, rl) with q of shape (m, n) and r of shape (n, n).
    """
    m, n = ah.shape
    rh = ah.copy()
    rl = al.copy()
    vh = np.zeros((m, n))
    vl = np.zeros((m, n))
    beth = np.zeros(n)
    betl = np.zeros(n)

    for j in range(n):
        # squared norm of the pivot column below the diagonal
        sh = 0.0
        sl = 0.0
        for i in range(j, m):
            h, l = _dd_mul(rh[i, j], rl[i, j], rh[i, j], rl[i, j])
            sh, sl = _dd_add(sh, sl, h, l)
        if sh == 0.0:
            beth[j] = 0.0
            betl[j] = 0.0
            vh[j, j] = 1.0
            continue
        nh, nl = _dd_sqrt(sh, sl)
        if rh[j, j] < 0.0 or (rh[j, j] == 0.0 and rl[j, j] < 0.0):
            nh, nl = -nh, -nl
        # v = x + sign(x1)*||x|| e1, then beta = 2 / (v^T v)
        v0h, v0l = _dd_add(rh[j, j], rl[j, j], nh, nl)
        vh[j, j] = v0h
        vl[j, j] = v0l
        for i in range(j + 1, m):
            vh[i, j] = rh[i, j]
            vl[i, j] = rl[i, j]
        # v^T v = s + 2*x1*norm + norm^2 = 2*(s + x1*norm) since norm^2 = s
        th, tl = _dd_mul(rh[j, j], rl[j, j], nh, nl)
        wh, wl = _dd_add(sh, sl, th, tl)
        wh, wl = _dd_add(wh, wl, sh, sl)
        wh, wl = _dd_add(wh, wl, th, tl)
        bh, bl = _dd_recip(wh, wl)
        beth[j] = 2.0 * bh
        betl[j] = 2.0 * bl

        # apply H = I - beta v v^T to the trailing columns
        for c in range(j, n):
            dh = 0.0
            dl = 0.0
            for i in range(j, m):
                h, l = _dd_mul(vh[i, j], vl[i, j], rh[i, c], rl[i, c])
                dh, dl = _dd_add(dh, dl, h, l)
            dh, dl = _dd_mul(dh, dl, beth[j], betl[j])
            for i in range(j, m):
                h, l = _dd_mul(dh, dl, vh[i, j], vl[i, j])
                rh[i, c], rl[i, c] = _dd_add(rh[i, c], rl[i, c], -h, -l)

    # accumulate Q = H_0 ... H_{n-1} applied to the first n columns of I
    qh = np.zeros((m, n))
    ql = np.zeros((m, n))
    for j in range(n):
        qh[j, j] = 1.0
    for j in range(n - 1, -1, -1):
        if beth[j] == 0.0:
            continue
        for c in range(n):
            dh = 0.0
            dl = 0.0
            for i in range(j, m):
                h, l = _dd_mul(vh[i, j], vl[i, j], qh[i, c], ql[i, c])
                dh, dl = _dd_add(dh, dl, h, l)
            dh, dl = _dd_mul(dh, dl, beth[j], betl[j])
            for i in range(j, m):
                h, l = _dd_mul(dh, dl, vh[i, j], vl[i, j])
                qh[i, c], ql[i, c] = _dd_add(qh[i, c], ql[i, c], -h, -l)
    return qh, ql, rh, rl


# ---------------------------------------------------------------------------
# one-sided Jacobi sweeps


@njit(**_JIT)
def jacobi_sweeps_dd(ah, al, tol, max_sweeps):
    """Cyclic-by-rows one-sided Jacobi on a dd matrix, in place.

    Rotation parameters are built so that cs**2 + sn**2 = 1 + O(2**-104);
    each rotation is then a scalar multiple of an exact plane rotation and
    the singular values drift by at most O(2**-104) per rotation.
    Returns (sweeps, rotations, converged).
    """
    m, n = ah.shape
    n2h = np.empty(n)
    n2l = np.empty(n)
    sweeps = 0
    rotations = 0
    converged = False
    while sweeps < max_sweeps:
        sweeps += 1
        for j in range(n):
            sh = 0.0
            sl = 0.0
            for i in range(m):
                h, l = _dd_mul(ah[i, j], al[i, j], ah[i, j], al[i, j])
                sh, sl = _dd_add(sh, sl, h, l)
            n2h[j] = sh
            n2l[j] = sl
        rotated = 0
        for p in range(n - 1):
            for q in range(p + 1, n):
                dh = 0.0
                dl = 0.0
                for i in range(m):
                    h, l = _dd_mul(ah[i, p], al[i, p], ah[i, q], al[i, q])
                    dh, dl = _dd_add(dh, dl, h, l)
                thresh = tol * math.sqrt(n2h[p]) * math.sqrt(n2h[q])
                # "not >" rather than "<=" so a NaN threshold skips the pair
                if not (abs(dh) + abs(dl) > thresh):
                    continue
                # form gqq - gpp in dd before demoting: for (near-)degenerate
                # pairs the demoted difference would be pure roundoff and the
                # resulting bogus small angle would stall convergence
                numh, numl = _dd_add(n2h[q], n2l[q], -n2h[p], -n2l[p])
                gpq = dh + dl
                if gpq == 0.0:
                    continue
                tau = (numh + numl) / (gpq + gpq)
                if not math.isfinite(tau):
                    continue
                t = math.copysign(1.0, tau) / (
                    abs(tau) + math.sqrt(1.0 + tau * tau)
                )
                # cs = 1/sqrt(1+t^2) and sn = t*cs, both to dd accuracy
                th, tl = _two_prod(t, t)
                xh, xl = _dd_add_f(th, tl, 1.0)
                csh, csl = _dd_rsqrt(xh, xl)
                snh, snl = _dd_mul_f(csh, csl, t)
                for i in range(m):
                    aph = ah[i, p]
                    apl = al[i, p]
                    aqh = ah[i, q]
                    aql = al[i, q]
                    u1h, u1l = _dd_mul(csh, csl, aph, apl)
                    u2h, u2l = _dd_mul(snh, snl, aqh, aql)
                    ah[i, p], al[i, p] = _dd_add(u1h, u1l, -u2h, -u2l)
                    w1h, w1l = _dd_mul(snh, snl, aph, apl)
                    w2h, w2l = _dd_mul(csh, csl, aqh, aql)
                    ah[i, q], al[i, q] = _dd_add(w1h, w1l, w2h, w2l)
                # keep the norm bookkeeping consistent within the sweep,
                # recomputing outright if cancellation turns it nonpositive
                uph, upl = _dd_mul_f(dh, dl, t)
                n2h[p], n2l[p] = _dd_add(n2h[p], n2l[p], -uph, -upl)
                n2h[q], n2l[q] = _dd_add(n2h[q], n2l[q], uph, upl)
                for col in (p, q):
                    if n2h[col] <= 0.0:
                        sh = 0.0
                        sl = 0.0
                        for i in range(m):
                            h, l = _dd_mul(ah[i, col], al[i, col],
                                           ah[i, col], al[i, col])
                            sh, sl = _dd_add(sh, sl, h, l)
                        n2h[col] = sh
                        n2l[col] = sl
                rotated += 1
        rotations += rotated
        if rotated == 0:
            converged = True
            break
    return sweeps, rotations, converged


@njit(**_JIT)
def colnorms2_dd(ah, al):
    """Squared column norms of a dd matrix, in dd."""
    m, n = ah.shape
    sh = np.empty(n)
    sl = np.empty(n)
    for j in range(n):
        th = 0.0
        tl = 0.0
        for i in range(m):
            h, l = _dd_mul(ah[i, j], al[i, j], ah[i, j], al[i, j])
            th, tl = _dd_add(th, tl, h, l)
        sh[j] = th
        sl[j] = tl
    return sh, sl


@njit(**_JIT)
def scale_columns_dd(ah, al, dh, dl):
    """Scale column j of a dd matrix by the dd scalar (dh[j], dl[j])."""
    m, n = ah.shape
    for j in range(n):
        for i in range(m):
            ah[i, j], al[i, j] = _dd_mul(ah[i, j], al[i, j], dh[j], dl[j])


@njit(**_JIT)
def jacobi_sweeps_dense(a, v, accumulate_v, tol, max_sweeps, zero):
    """Cyclic-by-rows one-sided Jacobi on a binary32/binary64 matrix.

    ``a`` is modified in place; ``v`` accumulates the right rotations when
    requested. Dot products and column norms are accumulated in the dtype of
    ``a`` (``zero`` fixes that dtype); rotation angles are formed in binary64
    and rounded on store. Returns (sweeps, rotations, converged).
    """
    m, n = a.shape
    n2 = np.empty(n)
    nv = v.shape[0]
    sweeps = 0
    rotations = 0
    converged = False
    while sweeps < max_sweeps:
        sweeps += 1
        for j in range(n):
            s = zero
            for i in range(m):
                s += a[i, j] * a[i, j]
            n2[j] = s
        rotated = 0
        for p in range(n - 1):
            for q in range(p + 1, n):
                d = zero
                for i in range(m):
                    d += a[i, p] * a[i, q]
                gpq = float(d)
                gpp = n2[p]
                gqq = n2[q]
                # "not >" rather than "<=" so a NaN threshold skips the pair
                if not (abs(gpq) > tol * math.sqrt(gpp) * math.sqrt(gqq)):
                    continue
                if gpq == 0.0:
                    continue
                tau = (gqq - gpp) / (gpq + gpq)
                if not math.isfinite(tau):
                    continue
                t = math.copysign(1.0, tau) / (
                    abs(tau) + math.sqrt(1.0 + tau * tau)
                )
                cs = 1.0 / math.sqrt(1.0 + t * t)
                sn = t * cs
                for i in range(m):
                    ap = a[i, p]
                    aq = a[i, q]
                    a[i, p] = cs * ap - sn * aq
                    a[i, q] = sn * ap + cs * aq
                if accumulate_v:
                    for i in range(nv):
                        vp = v[i, p]
                        vq = v[i, q]
                        v[i, p] = cs * vp - sn * vq
                        v[i, q] = sn * vp + cs * vq
                upd = t * gpq
                n2[p] = gpp - upd
                n2[q] = gqq + upd
                for col in (p, q):
                    if n2[col] <= 0.0:
                        s = zero
                        for i in range(m):
                            s += a[i, col] * a[i, col]
                        n2[col] = float(s)
                rotated += 1
        rotations += rotated
        if rotated == 0:
            converged = True
            break
    return sweeps, rotations, converged


@njit(**_JIT)
def max_offdiag_cosine(a, zero):
    """max_{p<q} |a_p . a_q| / (||a_p|| ||a_q||), accumulated in dtype."""
    m, n = a.shape
    n2 = np.empty(n)
    for j in range(n):
        s = zero
        for i in range(m):
            s += a[i, j] * a[i, j]
        n2[j] = s
    worst = 0.0
    for p in range(n - 1):
        for q in range(p + 1, n):
            d = zero
            for i in range(m):
                d += a[i, p] * a[i, q]
            c = abs(float(d)) / (math.sqrt(n2[p]) * math.sqrt(n2[q]))
            if c > worst:
                worst = c
    return worst


def warmup():
    """Force compilation of every kernel on tiny inputs."""
    a = np.eye(3, 2)
    z = np.zeros((3, 2))
    matmul_f_f_dd(np.eye(2), np.eye(2))
    matmul_dd_dd(np.eye(2), np.zeros((2, 2)), np.eye(2), np.zeros((2, 2)))
    matmul_f64(np.eye(2), np.eye(2))
    gram_dd(a, z)
    qr_dd(a.copy(), z.copy())
    jacobi_sweeps_dd(a.copy(), z.copy(), 1e-30, 2)
    colnorms2_dd(a, z)
    scale_columns_dd(a.copy(), z.copy(), np.ones(2), np.zeros(2))
    for dt in (np.float64, np.float32):
        w = np.asfortranarray(np.eye(3, 2, dtype=dt))
        vw = np.asfortranarray(np.eye(2, dtype=dt))
        jacobi_sweeps_dense(w, vw, True, 1e-7, 2, dt(0.0))
        max_offdiag_cosine(w, dt(0.0))
