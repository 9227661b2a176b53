import numpy as np
import pytest

from mpjacobi.errors import DimensionError
from mpjacobi.linalg import (
    apply_householder_seq,
    bidiagonalize,
    column_norms,
    householder_qr,
    spectral_norm,
)

U64 = 2.0**-53
U32 = 2.0**-24


class TestColumnNorms:
    def test_identity(self):
        assert np.array_equal(column_norms(np.eye(3)), np.ones(3))

    def test_three_four_five(self):
        assert column_norms(np.array([[3.0], [4.0]]))[0] == 5.0

    def test_no_underflow(self):
        col = np.full((10**6, 1), 1e-200)
        norm = column_norms(col)[0]
        assert norm > 0
        assert abs(norm - 1e-197) <= 1e-12 * 1e-197

    def test_scale_homogeneous_power_of_two(self, rng):
        a = rng.standard_normal((20, 6))
        assert np.array_equal(column_norms(a * 8.0), 8.0 * column_norms(a))

    def test_permutation_equivariant(self, rng):
        a = rng.standard_normal((15, 5))
        perm = rng.permutation(5)
        assert np.array_equal(column_norms(a[:, perm]), column_norms(a)[perm])


class TestHouseholderQr:
    def test_already_triangular(self):
        r = np.triu(np.abs(np.random.default_rng(3).standard_normal((4, 4)))) + np.eye(4)
        qr = householder_qr(r)
        assert np.allclose(qr.q, np.eye(4), atol=1e-14)
        assert np.allclose(qr.r, r, atol=1e-14)

    def test_orthonormal_input(self, rng):
        q0 = householder_qr(rng.standard_normal((10, 4))).q
        qr = householder_qr(q0)
        assert np.allclose(qr.r, np.eye(4), atol=1e-13)

    def test_random_residuals(self, rng):
        a = rng.standard_normal((20, 5))
        qr = householder_qr(a)
        assert np.linalg.norm(qr.q @ qr.r - a) / np.linalg.norm(a) <= 1e-14
        assert np.linalg.norm(qr.q.T @ qr.q - np.eye(5)) <= 1e-14

    @pytest.mark.parametrize("shape", [(10, 5), (50, 20), (200, 150)])
    def test_backward_stability_suite(self, shape, rng):
        m, n = shape
        for _ in range(20):
            a = rng.standard_normal((m, n))
            qr = householder_qr(a)
            assert np.linalg.norm(qr.q @ qr.r - a) <= 10 * n * U64 * np.linalg.norm(a)
            assert np.linalg.norm(qr.q.T @ qr.q - np.eye(n)) <= 10 * n * U64
            assert np.all(np.diag(qr.r) >= 0)
            assert np.allclose(qr.r, np.triu(qr.r))

    def test_rank_deficient_allowed(self):
        a = np.ones((5, 3))
        qr = householder_qr(a)
        assert np.allclose(qr.q @ qr.r, a, atol=1e-14)

    def test_float32(self, rng):
        a = rng.standard_normal((12, 6)).astype(np.float32)
        qr = householder_qr(a)
        assert qr.q.dtype == np.float32
        assert np.linalg.norm(qr.q @ qr.r - a) <= 10 * 6 * U32 * np.linalg.norm(a)

    def test_wide_rejected(self):
        with pytest.raises(DimensionError):
            householder_qr(np.ones((2, 3)))


class TestBidiagonalize:
    def test_already_bidiagonal(self):
        a = np.diag([3.0, 2.0, 1.0]) + np.diag([0.5, 0.25], 1)
        b, right = bidiagonalize(a)
        assert np.allclose(b, a, atol=1e-15)
        ident = apply_householder_seq(right, np.eye(3))
        assert np.allclose(ident, np.eye(3), atol=1e-15)

    def test_reconstruction_debug_mode(self, rng):
        a = rng.standard_normal((6, 4)).astype(np.float32)
        b, right, left = bidiagonalize(a, keep_left=True)
        ub = np.zeros((6, 4), dtype=np.float64)
        ub[:4, :4] = b.astype(np.float64)
        full = apply_householder_seq(left, ub)
        vt = apply_householder_seq(right, np.eye(4)).T
        recon = full @ vt
        assert np.linalg.norm(recon - a) <= 50 * U32 * np.linalg.norm(a)

    def test_structure(self, rng):
        a = rng.standard_normal((9, 5))
        b, right = bidiagonalize(a)
        assert b.shape == (5, 5)
        assert np.allclose(b, np.triu(np.tril(b, 1)))
        assert len(right) == 3  # n - 2 reflectors

    def test_n2_degenerates_to_qr(self, rng):
        a = rng.standard_normal((6, 2))
        b, right = bidiagonalize(a)
        assert len(right) == 0
        r = householder_qr(a).r
        assert np.allclose(np.abs(b), np.abs(r), atol=1e-14)

    def test_n1_column_norm(self):
        b, right = bidiagonalize(np.array([[3.0], [4.0]]))
        assert b[0, 0] == 5.0 and len(right) == 0


class TestApplyHouseholderSeq:
    def test_empty_sequence(self, rng):
        from mpjacobi.linalg import HouseholderSeq

        x = rng.standard_normal((4, 3))
        assert np.array_equal(apply_householder_seq(HouseholderSeq(dim=4), x), x)

    def test_involution(self, rng):
        from mpjacobi.linalg import HouseholderSeq

        v = np.array([1.0, -1.0, 0.0])
        seq = HouseholderSeq(vectors=[(0, v, 1.0)], dim=3)
        x = rng.standard_normal((3, 3))
        once = apply_householder_seq(seq, x)
        twice = apply_householder_seq(seq, once)
        assert np.allclose(twice, x, atol=1e-15)

    def test_orthogonality_of_promoted_product(self, rng):
        a = rng.standard_normal((30, 20)).astype(np.float32)
        _, right = bidiagonalize(a)
        v = apply_householder_seq(right, np.eye(20))
        assert v.dtype == np.float64
        assert np.linalg.norm(v.T @ v - np.eye(20)) <= 10 * 20 * U64


class TestSpectralNorm:
    def test_diagonal(self):
        assert spectral_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0, rel=1e-12)

    def test_zero(self):
        assert spectral_norm(np.zeros((4, 2))) == 0.0

    def test_rank_one_small(self, rng):
        u = rng.standard_normal(8)
        v = rng.standard_normal(5)
        a = np.outer(u, v)
        truth = np.linalg.norm(u) * np.linalg.norm(v)
        assert spectral_norm(a) == pytest.approx(truth, rel=1e-10)

    def test_rank_one_power_iteration_path(self, rng):
        u = rng.standard_normal(80)
        v = rng.standard_normal(40)
        a = np.outer(u, v)
        truth = np.linalg.norm(u) * np.linalg.norm(v)
        assert spectral_norm(a) == pytest.approx(truth, rel=1e-5)
