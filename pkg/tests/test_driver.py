import math

import numpy as np
import pytest

from mpjacobi.driver import SDQ, SSD, get_config, mp3_svd, plain_jacobi_svd
from mpjacobi.errors import DimensionError
from mpjacobi.gallery import haar_orthogonal, lauchli_gram, randsvd, rng_gaussian
from mpjacobi.jacobi import JacobiOptions
from mpjacobi.metrics import (
    accuracy_bound,
    forward_errors,
    kappa2_scaled,
    off_quantity,
    reference_svd,
)
from mpjacobi.precision import matmul_extended

U64 = 2.0**-53
U32 = 2.0**-24


class TestConfigs:
    def test_registry(self):
        assert get_config("sdq") is SDQ
        assert get_config("SSD") is SSD
        with pytest.raises(ValueError):
            get_config("qqq")

    def test_roundoffs_ordered(self):
        assert SDQ.u_high < SDQ.u_working < SDQ.u_low
        assert SSD.u_high < SSD.u_working <= SSD.u_low

    def test_invalid_config_rejected(self):
        from mpjacobi.driver import PrecisionConfig

        with pytest.raises(ValueError):
            PrecisionConfig("bad", np.float64, np.float32, "dd")


class TestMp3Svd:
    def test_orthogonal_input(self):
        q = haar_orthogonal(rng_gaussian(3), 24, 16).to_float64()
        res, diag = mp3_svd(q)
        assert res.converged
        assert np.max(np.abs(res.sigma - 1.0)) <= 16 * U64
        recon = res.u @ np.diag(res.sigma) @ res.v.T
        assert np.linalg.norm(recon - q) <= 30 * 16 * U64

    @pytest.mark.parametrize("method", ["orth", "bidiag"])
    def test_composition_residual(self, method):
        gal = randsvd(40, 25, 1e6, 3, seed=31)
        res, diag = mp3_svd(gal.a, method=method)
        recon = res.u @ np.diag(res.sigma) @ res.v.T
        # the preconditioner carries an O(n u) orthogonality defect, so the
        # reconstruction is accurate at that scale, not at sigma level
        assert np.linalg.norm(recon - gal.a) <= 50 * 25 * U64 * np.linalg.norm(gal.a)

    def test_accuracy_beats_plain(self):
        gal = randsvd(100, 75, 1e8, 3, seed=41)
        res, diag = mp3_svd(gal.a, diagnostics="light")
        rep = forward_errors(res.sigma, gal.sigma_true)
        k2d = kappa2_scaled(diag.a_tilde_high)
        bound = accuracy_bound(100, 75, U64, k2d)
        assert rep.max_forward_error <= bound
        plain = plain_jacobi_svd(gal.a, use_qr=False)
        rep_plain = forward_errors(plain.sigma, gal.sigma_true)
        assert rep_plain.max_forward_error >= 10 * rep.max_forward_error

    def test_lauchli_gram_moderate(self):
        gal = lauchli_gram(100, 1e-3)
        res, _ = mp3_svd(gal.a, diagnostics="light")
        rep = forward_errors(res.sigma, gal.sigma_true)
        assert rep.max_forward_error <= 1e-12

    def test_qr_trigger_automatic(self):
        gal = randsvd(40, 20, 1e4, 3, seed=51)  # 40 >= 11*20/6
        res, diag = mp3_svd(gal.a, diagnostics="light")
        assert diag.used_qr
        rep = forward_errors(res.sigma, gal.sigma_true)
        k2d = kappa2_scaled(diag.a_tilde_high)
        assert rep.max_forward_error <= accuracy_bound(40, 20, U64, k2d)
        u_gram = res.u.T @ res.u
        assert np.linalg.norm(u_gram - np.eye(20)) <= 100 * 20 * U64

    def test_qr_override(self):
        gal = randsvd(40, 20, 1e4, 3, seed=51)
        _, diag = mp3_svd(gal.a, use_qr=False, diagnostics="light")
        assert not diag.used_qr
        _, diag2 = mp3_svd(gal.a, qr_threshold=1.0, diagnostics="light")
        assert diag2.used_qr

    def test_qr_before_precond_negative_control(self):
        gal = randsvd(40, 20, 1e4, 3, seed=51)
        res, diag = mp3_svd(gal.a, qr_before_precond=True, diagnostics="light")
        assert res.converged
        assert res.u.shape == (40, 20)

    def test_diagnostics_populated(self):
        gal = randsvd(30, 20, 1e4, 3, seed=61)
        res, diag = mp3_svd(gal.a)
        assert diag.orth_residual <= 20 * U64
        assert diag.off_after < diag.off_before
        assert diag.obliq_after < 1e-3
        assert 1.0 <= diag.kappa2d_after < 2.0
        assert diag.kappa2d_before > 1e3
        assert isinstance(diag.assumption_flags, tuple)
        assert diag.method == "orth" and diag.config == "sdq"

    def test_light_diagnostics_skip_expensive(self):
        gal = randsvd(30, 20, 1e4, 3, seed=61)
        _, diag = mp3_svd(gal.a, diagnostics="light")
        assert math.isnan(diag.kappa2d_before)
        assert not math.isnan(diag.kappa2d_after)

    def test_relative_weyl_transfer(self):
        # sigma(A@V) stays within the orthogonality defect of sigma(A)
        gal = randsvd(30, 20, 1e5, 3, seed=71)
        _, diag = mp3_svd(gal.a, diagnostics="light")
        sv_a = reference_svd(gal.a)
        sv_at = reference_svd(diag.a_tilde_high)
        rel = np.abs((sv_at.hi - sv_a.hi) + (sv_at.lo - sv_a.lo)) / sv_a.hi
        assert np.max(rel) <= diag.orth_residual + 1e-30

    def test_off_after_qr_bound(self):
        # QR of the preconditioned matrix keeps the off quantity small
        gal = randsvd(60, 20, 1e5, 3, seed=81)
        _, diag = mp3_svd(gal.a, use_qr=False, diagnostics="light")
        at = np.asarray(diag.a_tilde_high.to_float64())
        from mpjacobi.linalg import householder_qr

        r = householder_qr(at).r
        m, n = at.shape
        gamma = 10 * m * n * U64 / (1 - 10 * m * n * U64)
        gram_at = at.T @ at
        lhs = off_quantity(r.T @ r)
        rhs = off_quantity(gram_at) + 3 * n**1.5 * gamma * np.linalg.norm(gram_at)
        assert lhs <= rhs

    def test_ssd_configuration(self):
        gal = randsvd(80, 30, 1e4, 3, seed=91)
        res, diag = mp3_svd(gal.a, SSD, diagnostics="light")
        assert res.sigma.dtype == np.float64
        assert res.u.dtype == np.float32
        truth = reference_svd(gal.a.astype(np.float32).astype(np.float64))
        rep = forward_errors(res.sigma, truth)
        k2d = kappa2_scaled(np.asarray(diag.a_tilde_high, dtype=np.float64))
        assert rep.max_forward_error <= accuracy_bound(80, 30, U32, k2d)

    def test_invalid_inputs(self):
        with pytest.raises(DimensionError):
            mp3_svd(np.ones((2, 3)))
        with pytest.raises(ValueError):
            mp3_svd(np.full((3, 2), np.nan))
        with pytest.raises(ValueError):
            mp3_svd(np.eye(3), method="magic")

    def test_nonconvergence_propagates(self):
        gal = randsvd(30, 20, 1e8, 3, seed=95)
        res, diag = mp3_svd(gal.a, opts=JacobiOptions(max_sweeps=1),
                            diagnostics="light")
        assert not res.converged
        assert res.sigma.shape == (20,)


class TestPlainJacobi:
    def test_identity(self):
        res = plain_jacobi_svd(np.eye(5))
        assert np.array_equal(res.sigma, np.ones(5))

    def test_tiny_diag_no_rotations(self):
        res = plain_jacobi_svd(np.diag([1.0, 1e-8]), use_qr=False)
        assert np.array_equal(res.sigma, [1.0, 1e-8])
        assert res.rotations == 0
        assert res.converged

    def test_qr_prestep(self):
        gal = randsvd(60, 20, 1e5, 3, seed=99)
        res = plain_jacobi_svd(gal.a)  # auto-trigger: 60 >= 11*20/6
        rep = forward_errors(res.sigma, gal.sigma_true)
        k2d = kappa2_scaled(gal.a)
        assert rep.max_forward_error <= accuracy_bound(60, 20, U64, k2d)
        assert np.linalg.norm(res.u.T @ res.u - np.eye(20)) <= 100 * 20 * U64

    def test_mp3_needs_fewer_sweeps(self):
        gal = randsvd(60, 45, 1e8, 3, seed=103)
        plain = plain_jacobi_svd(gal.a, use_qr=False)
        res, _ = mp3_svd(gal.a, diagnostics="light")
        assert res.sweeps < plain.sweeps
