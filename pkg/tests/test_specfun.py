"""Tests for the special functions."""

import math

import numpy as np
import pytest

from qpm.lattice import StructureSpec
from qpm.specfun import alpha_phase, dirichlet_log_slope, dirichlet_ratio, sinc, sinc_log_slope


class TestSinc:
    def test_continuous_at_zero(self):
        assert sinc(0.0) == 1.0

    def test_zero_at_pi(self):
        assert abs(sinc(math.pi)) < 1e-15

    def test_half_pi(self):
        assert sinc(math.pi / 2) == pytest.approx(2 / math.pi, rel=1e-15)

    def test_even_and_bounded(self):
        x = np.linspace(-40, 40, 20001)
        y = sinc(x)
        assert np.all(np.abs(y) <= 1.0)
        assert np.allclose(y, sinc(-x), rtol=0, atol=1e-16)

    def test_scalar_in_scalar_out(self):
        assert isinstance(sinc(0.3), float)

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_non_finite_rejected(self, bad):
        with pytest.raises(ValueError):
            sinc(bad)


class TestDirichletRatio:
    def test_limit_at_zero(self):
        assert dirichlet_ratio(0.0, 22) == 22.0

    def test_zero_at_half_pi(self):
        assert abs(dirichlet_ratio(math.pi / 2, 22)) < 1e-12

    def test_limit_at_pi(self):
        assert dirichlet_ratio(math.pi, 5) == pytest.approx(5.0, rel=1e-12)

    def test_limit_sign_follows_parity(self):
        # sin(22*theta)/sin(theta) flips sign at odd multiples of pi
        assert dirichlet_ratio(math.pi, 22) == pytest.approx(-22.0, rel=1e-12)
        assert dirichlet_ratio(2 * math.pi, 22) == pytest.approx(22.0, rel=1e-12)
        assert dirichlet_ratio(-3 * math.pi, 7) == pytest.approx(7.0, rel=1e-12)

    def test_n_one_is_unity(self):
        theta = np.linspace(-10, 10, 101)
        assert np.allclose(dirichlet_ratio(theta, 1), 1.0, rtol=0, atol=1e-15)

    def test_bounded_by_n(self):
        theta = np.linspace(-20, 20, 40001)
        for n in (2, 7, 22, 101):
            assert np.all(np.abs(dirichlet_ratio(theta, n)) <= n)

    @pytest.mark.parametrize("n", [2, 5, 22, 32])
    @pytest.mark.parametrize("k", [-2, -1, 0, 1, 3])
    def test_continuity_across_multiples_of_pi(self, n, k):
        limit = dirichlet_ratio(k * math.pi, n)
        for side in (-1, 1):
            theta = k * math.pi + side * 1e-6
            direct = math.sin(n * theta) / math.sin(theta)
            assert limit == pytest.approx(direct, rel=1e-4)

    def test_matches_direct_away_from_singularities(self):
        theta = np.linspace(0.05, 3.0, 500)
        direct = np.sin(9 * theta) / np.sin(theta)
        assert np.allclose(dirichlet_ratio(theta, 9), direct, rtol=1e-12, atol=1e-12)

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            dirichlet_ratio(0.1, 0)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            dirichlet_ratio(math.nan, 3)


class TestAlphaPhase:
    def test_vanishes_at_g_for_single_block(self):
        spec = StructureSpec(l=1.3, n=4, m=1)
        assert alpha_phase(spec.g_vector, spec) == pytest.approx(0.0, abs=1e-14)

    def test_direct_substitution(self):
        spec = StructureSpec(l=1.0, n=2, m=1)
        assert alpha_phase(0.0, spec) == pytest.approx(-math.pi, rel=1e-15)

    def test_affine_slope(self, triplet_spec):
        s = triplet_spec
        dk = np.array([-1.0, 0.2, 0.87, 3.0])
        expected = s.n * s.l * s.m * dk / 2
        assert np.allclose(alpha_phase(dk, s) - alpha_phase(0.0, s), expected, rtol=1e-12)


class TestLogSlopes:
    H = 1e-6

    def _numeric(self, f, x):
        return (math.log(abs(f(x + self.H))) - math.log(abs(f(x - self.H)))) / (2 * self.H)

    @pytest.mark.parametrize("x", [0.4, 1.7, -2.2, 5.0])
    def test_sinc_log_slope(self, x):
        assert sinc_log_slope(x) == pytest.approx(self._numeric(sinc, x), rel=1e-6)

    def test_sinc_log_slope_small_argument(self):
        assert sinc_log_slope(1e-4) == pytest.approx(-1e-4 / 3, rel=1e-6)
        assert sinc_log_slope(0.0) == 0.0

    @pytest.mark.parametrize("theta,n", [(0.3, 5), (1.2, 22), (-0.7, 9), (3.3, 4)])
    def test_dirichlet_log_slope(self, theta, n):
        numeric = self._numeric(lambda t: dirichlet_ratio(t, n), theta)
        assert dirichlet_log_slope(theta, n) == pytest.approx(numeric, rel=1e-5)

    def test_dirichlet_log_slope_near_multiple_of_pi(self):
        n, t = 22, 1e-5
        expected = -(n * n - 1) * t / 3
        assert dirichlet_log_slope(math.pi + t, n) == pytest.approx(expected, rel=1e-6)
