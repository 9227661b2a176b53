import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mpjacobi.errors import DimensionError, RankDeficientError, ZeroColumnError
from mpjacobi.gallery import lauchli_gram, randsvd
from mpjacobi.metrics import (
    accuracy_bound,
    forward_errors,
    kappa2,
    kappa2_scaled,
    off_quantity,
    reference_svd,
)
from mpjacobi.precision import DDArray, U_DOUBLE_DOUBLE


class TestOffQuantity:
    def test_diagonal(self):
        assert off_quantity(np.diag([1.0, 2.0, 3.0])) == 0.0

    def test_all_ones(self):
        assert off_quantity(np.ones((3, 3))) == pytest.approx(math.sqrt(6))

    def test_non_square_rejected(self):
        with pytest.raises(DimensionError):
            off_quantity(np.ones((2, 3)))

    def test_dd_input(self):
        g = DDArray(np.ones((2, 2)))
        assert off_quantity(g) == pytest.approx(math.sqrt(2))


class TestKappa:
    def test_identity(self):
        assert kappa2(np.eye(4)) == pytest.approx(1.0, rel=1e-12)
        assert kappa2_scaled(np.eye(4)) == pytest.approx(1.0, rel=1e-12)

    def test_diag_scaling_removed(self):
        a = np.diag([100.0, 1.0])
        assert kappa2(a) == pytest.approx(100.0, rel=1e-12)
        assert kappa2_scaled(a) == pytest.approx(1.0, rel=1e-12)

    def test_rank_deficient_guard(self):
        a = np.ones((4, 2))  # exactly rank one
        with pytest.raises(RankDeficientError):
            kappa2(a)

    def test_zero_column_guard(self):
        a = np.zeros((3, 2))
        a[:, 0] = 1.0
        with pytest.raises(ZeroColumnError):
            kappa2_scaled(a)

    def test_working_precision_path(self):
        gal = randsvd(30, 20, 1e4, 3, seed=6)
        k_ext = kappa2(gal.a)
        k_wrk = kappa2(gal.a, precision="working")
        assert k_wrk == pytest.approx(k_ext, rel=1e-9)

    def test_column_scaling_invariance(self, rng):
        gal = randsvd(30, 20, 1e4, 3, seed=11)
        scales = np.exp(rng.uniform(-3, 3, 20))
        k1 = kappa2_scaled(gal.a)
        k2 = kappa2_scaled(gal.a * scales)
        assert abs(k1 - k2) / k1 <= 1e-10

    def test_sanity_relation(self):
        gal = randsvd(25, 15, 1e3, 4, seed=13)
        norms = np.sqrt(np.sum(gal.a**2, axis=0))
        assert kappa2_scaled(gal.a) <= kappa2(gal.a) * (norms.max() / norms.min()) * (1 + 1e-10)


class TestForwardErrors:
    def test_identical(self):
        rep = forward_errors([1.0, 0.5], [1.0, 0.5])
        assert rep.max_forward_error == 0.0
        assert np.array_equal(rep.per_k_forward_error, [0.0, 0.0])

    def test_uniform_relative_shift(self):
        sigma = np.array([2.0, 1.0, 0.25])
        rep = forward_errors(sigma * (1 + 1e-10), sigma)
        assert np.allclose(rep.per_k_forward_error, 1e-10, rtol=1e-4)

    def test_permutation_invariance(self, rng):
        sc = np.abs(rng.standard_normal(6)) + 0.5
        st_ = sc * (1 + rng.standard_normal(6) * 1e-12)
        perm = rng.permutation(6)
        r1 = forward_errors(sc, st_)
        r2 = forward_errors(sc[perm], st_[perm])
        assert np.array_equal(np.sort(r1.per_k_forward_error),
                              np.sort(r2.per_k_forward_error))
        assert r1.max_forward_error == r2.max_forward_error

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            forward_errors([1.0], [1.0, 2.0])

    def test_nonpositive_truth(self):
        with pytest.raises(ValueError):
            forward_errors([1.0], [0.0])

    def test_bound_recorded(self):
        rep = forward_errors([1.0 + 1e-12], [1.0], bound_value=1e-10,
                             truth_source="closed-form")
        assert rep.bound_satisfied
        assert rep.truth_source == "closed-form"

    def test_dd_truth_resolves_tiny_errors(self):
        truth = DDArray(np.array([1.0]), np.array([2.0**-70]))
        rep = forward_errors([1.0], truth)
        assert rep.max_forward_error == pytest.approx(2.0**-70, rel=1e-10)

    @given(st.floats(min_value=0.1, max_value=10), st.floats(min_value=-1e-8, max_value=1e-8))
    def test_relative_error_definition(self, sigma, delta):
        rep = forward_errors([sigma * (1 + delta)], [sigma])
        # the product itself rounds, so agreement holds to one ulp of sigma
        assert rep.max_forward_error == pytest.approx(abs(delta), rel=1e-6,
                                                      abs=3e-16)


class TestReferenceSvd:
    def test_diag_exact(self):
        sv = reference_svd(np.diag([9.0, 4.0, 1.0]))
        assert np.array_equal(sv.hi, [9.0, 4.0, 1.0])

    def test_lauchli_closed_form_moderate(self):
        # mu = 1e-2: kappa2D ~ 5e5, reference resolves the closed form to
        # better than 1e-25
        gal = lauchli_gram(50, 1e-2)
        sv = reference_svd(gal.a)
        worst = Fraction(0)
        for k in range(50):
            truth = Fraction(gal.sigma_true.hi[k]) + Fraction(gal.sigma_true.lo[k])
            got = Fraction(sv.hi[k]) + Fraction(sv.lo[k])
            worst = max(worst, abs((got - truth) / truth))
        assert float(worst) <= 1e-25

    def test_lauchli_closed_form_illconditioned(self):
        # mu = 1e-3: kappa2D ~ 5e7 and the dd backward error is amplified
        # accordingly; the formula bound sqrt(m n) * u_dd * kappa2D applies
        gal = lauchli_gram(50, 1e-3)
        sv = reference_svd(gal.a)
        rel = np.abs((sv.hi - gal.sigma_true.hi)
                     + (sv.lo - gal.sigma_true.lo)) / gal.sigma_true.hi
        k2d = (50 + 1e-6) / 1e-6
        assert np.max(rel) <= 50 * U_DOUBLE_DOUBLE * k2d

    def test_cross_oracle_construction(self):
        gal = randsvd(50, 40, 1e6, 3, seed=15)
        sv = reference_svd(gal.a_extended)
        rel = np.abs((sv.hi - gal.sigma_target) + sv.lo) / gal.sigma_target
        assert np.max(rel) <= 1e-20


class TestAccuracyBound:
    def test_formula(self):
        u = 2.0**-53
        assert accuracy_bound(100, 50, u, 10.0) == 50 * u + math.sqrt(5000) * u * 10
