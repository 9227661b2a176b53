import math

import numpy as np
import pytest

from mpjacobi.errors import ZeroColumnError
from mpjacobi.gallery import haar_orthogonal, randsvd, rng_gaussian
from mpjacobi.metrics import kappa2, kappa2_scaled, off_quantity
from mpjacobi.precision import U_SINGLE, matmul_extended
from mpjacobi.precond import (
    obliquity,
    orthogonality_residual,
    precond_bidiag_method,
    precond_orth_method,
)

U64 = 2.0**-53


def _gram_extended(a, v):
    at = matmul_extended(a, v)
    return at, matmul_extended(at.T, at).to_float64()


class TestOrthMethod:
    def test_orthogonal_input(self, rng):
        q = haar_orthogonal(rng_gaussian(7), 30, 20).to_float64()
        pre = precond_orth_method(q)
        assert pre.method == "orth"
        assert pre.orth_residual <= 20 * U64
        # right singular vectors of an orthogonal matrix: A @ V stays
        # column-orthogonal, so the preconditioned Gram is nearly diagonal
        _, gram = _gram_extended(q, pre.v_tilde)
        assert off_quantity(gram) <= 100 * U_SINGLE * np.linalg.norm(q.T @ q)

    def test_diagonal_input(self):
        a = np.diag([5.0, 3.0, 1.0])
        pre = precond_orth_method(a)
        assert np.allclose(np.abs(pre.v_tilde), np.eye(3), atol=1e-6)

    def test_p2_on_illconditioned(self):
        gal = randsvd(100, 80, 1e8, 3, seed=21)
        pre = precond_orth_method(gal.a)
        assert pre.orth_residual <= 80 * U64
        _, gram = _gram_extended(gal.a, pre.v_tilde)
        ata = gal.a.T @ gal.a
        assert off_quantity(gram) <= 100 * U_SINGLE * np.linalg.norm(ata)

    def test_low_stage_diagnostics(self):
        gal = randsvd(30, 20, 1e4, 3, seed=2)
        pre = precond_orth_method(gal.a)
        assert pre.low_converged
        assert pre.sigma_low is not None and pre.sigma_low.shape == (20,)
        assert pre.low_sweeps >= 1


class TestBidiagMethod:
    def test_already_bidiagonal(self):
        a = np.diag([4.0, 3.0, 2.0, 1.0]) + np.diag([0.4, 0.3, 0.2], 1)
        pre = precond_bidiag_method(a)
        assert pre.method == "bidiag"
        assert pre.orth_residual <= 4 * U64

    def test_p1_p2(self):
        gal = randsvd(60, 40, 1e6, 2, seed=5)
        pre = precond_bidiag_method(gal.a)
        assert pre.orth_residual <= 40 * U64
        _, gram = _gram_extended(gal.a, pre.v_tilde)
        ata = gal.a.T @ gal.a
        assert off_quantity(gram) <= 100 * U_SINGLE * np.linalg.norm(ata)

    def test_repeated_singular_values(self, rng):
        u = haar_orthogonal(rng_gaussian(31), 20, 10).to_float64()
        v = haar_orthogonal(rng_gaussian(32), 10, 10).to_float64()
        sigma = np.array([2.0] * 5 + [1.0] * 5)
        a = (u * sigma) @ v.T
        pre = precond_bidiag_method(a)
        assert pre.orth_residual <= 10 * U64

    def test_proposition_small_kappa(self):
        # whenever 5*n*(u_low+u)*kappa2(A) <= 1, the preconditioned scaled
        # condition number is at most 3
        gal = randsvd(40, 25, 50.0, 3, seed=8)
        kap = kappa2(gal.a)
        assert 5 * 25 * (U_SINGLE + U64) * kap <= 1.0
        for build in (precond_orth_method, precond_bidiag_method):
            pre = build(gal.a)
            at, _ = _gram_extended(gal.a, pre.v_tilde)
            assert kappa2_scaled(at) <= 3.0


class TestObliquity:
    def test_orthonormal_columns(self, rng):
        q = haar_orthogonal(rng_gaussian(17), 25, 15).to_float64()
        assert obliquity(q) <= 15 * U64 * 10

    def test_identity(self):
        assert obliquity(np.eye(4)) <= 4 * U64

    def test_closed_form_2x2(self):
        a = np.array([[1.0, 1.0], [0.0, 1.0]])
        # normalized columns give singular values sqrt((2 +/- sqrt(2))/2)
        expect = max(abs(math.sqrt((2 + math.sqrt(2)) / 2) - 1),
                     abs(math.sqrt((2 - math.sqrt(2)) / 2) - 1))
        assert obliquity(a) == pytest.approx(expect, rel=1e-13)

    def test_zero_column_rejected(self):
        a = np.zeros((3, 2))
        a[:, 0] = 1.0
        with pytest.raises(ZeroColumnError):
            obliquity(a)


class TestBoundChain:
    """Scaled-condition-number bounds implied by off and obliquity."""

    @pytest.mark.parametrize("seed,mode,kappa", [(1, 3, 1e2), (2, 1, 1e4),
                                                 (3, 2, 1e4), (4, 4, 1e6)])
    def test_chain(self, seed, mode, kappa):
        gal = randsvd(50, 30, kappa, mode, seed)
        for build in (precond_orth_method, precond_bidiag_method):
            pre = build(gal.a)
            at = matmul_extended(gal.a, pre.v_tilde)
            at64 = at.to_float64()
            k2d = kappa2_scaled(at)
            theta_obl = obliquity(at64)
            if theta_obl < 1.0:
                assert k2d <= (1 + theta_obl) / (1 - theta_obl) * (1 + 1e-8)
            gram = matmul_extended(at.T, at).to_float64()
            min_norm2 = np.min(np.sum(at64**2, axis=0))
            theta_off = off_quantity(gram) / min_norm2
            if theta_off < 1.0:
                assert k2d <= math.sqrt((1 + theta_off) / (1 - theta_off)) * (1 + 1e-8)

    def test_orthogonality_residual_of_exact_q(self, rng):
        q = haar_orthogonal(rng_gaussian(23), 40, 40).to_float64()
        assert orthogonality_residual(q) <= 40 * U64
