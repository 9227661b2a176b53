"""Quick self-contained property battery behind ``mpjacobi check``.

A fast subset of the full test suite: kernel exactness against an exact
rational oracle, preconditioner properties, the scaled-condition-number
bound chain, and generator determinism.
"""

from __future__ import annotations

import math
import sys
from fractions import Fraction

import numpy as np

from .gallery import randsvd
from .metrics import kappa2_scaled, off_quantity
from .precision import U_SINGLE, matmul_extended, two_prod, two_sum
from .precond import obliquity, precond_bidiag_method, precond_orth_method


def _check_eft(rng, pairs=20000) -> bool:
    a = rng.standard_normal(pairs) * np.exp(rng.uniform(-40, 40, pairs))
    b = rng.standard_normal(pairs) * np.exp(rng.uniform(-40, 40, pairs))
    for x, y in zip(a, b):
        s, e = two_sum(x, y)
        if Fraction(s) + Fraction(e) != Fraction(x) + Fraction(y):
            return False
        p, q = two_prod(x, y)
        if Fraction(p) + Fraction(q) != Fraction(x) * Fraction(y):
            return False
    return True


def _check_integer_matmul(rng) -> bool:
    a = rng.integers(-1024, 1025, (8, 6)).astype(np.float64)
    b = rng.integers(-1024, 1025, (6, 7)).astype(np.float64)
    prod = matmul_extended(a, b)
    exact = a.astype(np.int64) @ b.astype(np.int64)
    return np.array_equal(prod.hi, exact.astype(np.float64)) and not prod.lo.any()


def _check_preconditioners() -> bool:
    ok = True
    for seed, mode in ((11, 3), (12, 2)):
        gal = randsvd(60, 40, 1e6, mode, seed)
        n = gal.a.shape[1]
        for build in (precond_orth_method, precond_bidiag_method):
            pre = build(gal.a)
            if pre.orth_residual > n * 2.0**-53:
                ok = False
            at = matmul_extended(gal.a, pre.v_tilde)
            gram = matmul_extended(at.T, at).to_float64()
            ata = gal.a.T @ gal.a
            if off_quantity(gram) > 100.0 * U_SINGLE * np.linalg.norm(ata):
                ok = False
            theta = obliquity(at.to_float64())
            if theta < 1.0:
                k2d = kappa2_scaled(at)
                if k2d > (1.0 + theta) / (1.0 - theta) * (1.0 + 1e-8):
                    ok = False
    return ok


def _check_determinism() -> bool:
    g1 = randsvd(30, 20, 1e4, 3, seed=5)
    g2 = randsvd(30, 20, 1e4, 3, seed=5)
    return np.array_equal(g1.a, g2.a)


def run_selfcheck(verbose: bool = False) -> bool:
    rng = np.random.default_rng(2024)
    checks = [
        ("error-free transformations exact", lambda: _check_eft(rng)),
        ("extended matmul exact on integers", lambda: _check_integer_matmul(rng)),
        ("preconditioner P1/P2 and bound chain", _check_preconditioners),
        ("gallery determinism", _check_determinism),
    ]
    all_ok = True
    for name, fn in checks:
        ok = fn()
        all_ok &= ok
        if verbose:
            print(f"[{'PASS' if ok else 'FAIL'}] {name}",
                  file=sys.stderr if not ok else sys.stdout)
    return all_ok
