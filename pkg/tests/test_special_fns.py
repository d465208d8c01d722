"""Tests for Bessel ratios, normalising constants and quadrature rules"""

import numpy as np
import pytest
from scipy import special

from utils.errors import DomainError
from utils.special_fns import (
    a_ratio,
    a_ratio_deriv,
    a_ratio_inv,
    a_ratio_over_x,
    bessel_i_scaled,
    integrate_circle,
    integrate_sphere,
    integrate_sphere3,
    integrate_sphere3_axial,
    log_sphere_exp_integral,
    log_vmf_norm_const,
    second_moment_coefficients,
)


def langevin(x):
    return 1.0 / np.tanh(x) - 1.0 / x


class TestBesselScaled:
    """Tests for exp(-x) I_nu(x)."""

    def test_origin(self):
        assert bessel_i_scaled(0.0, 0.0) == pytest.approx(1.0, rel=1e-15)

    def test_half_integer_closed_form(self):
        """I_{1/2}(x) = sqrt(2/(pi x)) sinh x."""
        expected = np.exp(-2.0) * np.sqrt(2.0 / (2.0 * np.pi)) * np.sinh(2.0)
        assert bessel_i_scaled(0.5, 2.0) == pytest.approx(expected, rel=1e-13)

    def test_large_argument_asymptotic(self):
        x = 199.0
        mu = 4.0
        terms = [1.0, -(mu - 1) / (8 * x), (mu - 1) * (mu - 9) / (2 * (8 * x) ** 2),
                 -(mu - 1) * (mu - 9) * (mu - 25) / (6 * (8 * x) ** 3),
                 (mu - 1) * (mu - 9) * (mu - 25) * (mu - 49) / (24 * (8 * x) ** 4)]
        expected = sum(terms) / np.sqrt(2 * np.pi * x)
        assert bessel_i_scaled(1.0, x) == pytest.approx(expected, rel=1e-8)

    def test_rejects_negative_argument(self):
        with pytest.raises(DomainError):
            bessel_i_scaled(0.0, -1.0)


class TestARatio:
    """Tests for A_p(x) = I_{p/2}(x) / I_{p/2-1}(x)."""

    def test_zero(self):
        assert a_ratio(2, 0.0) == 0.0

    def test_langevin_closed_form(self):
        assert a_ratio(3, 2.0) == pytest.approx(langevin(2.0), rel=1e-12)
        assert a_ratio(3, 2.0) == pytest.approx(0.537315, abs=1e-6)

    def test_limit_one(self):
        assert abs(a_ratio(2, 1.0e6) - 1.0) < 1e-5

    @pytest.mark.parametrize("x", [60.0, 200.0, 1.0e4])
    def test_continued_fraction_matches_quotient(self, x):
        for p in (2, 3, 7):
            nu = (p - 2) / 2.0
            expected = special.ive(nu + 1, x) / special.ive(nu, x)
            assert a_ratio(p, x) == pytest.approx(expected, rel=1e-11)

    def test_series_branch_continuity(self):
        below, above = a_ratio(3, 0.999e-3), a_ratio(3, 1.001e-3)
        assert below < above
        assert above == pytest.approx(langevin(1.001e-3), rel=1e-7)

    def test_vector_input_monotone(self):
        x = np.linspace(0.0, 100.0, 2001)
        values = a_ratio(3, x)
        assert values.shape == x.shape
        assert np.all(np.diff(values) > 0)
        assert np.all((values >= 0) & (values < 1))

    def test_over_x_at_zero(self):
        assert a_ratio_over_x(2, 0.0) == pytest.approx(0.5)
        assert a_ratio_over_x(3, 2.0) == pytest.approx(langevin(2.0) / 2.0, rel=1e-12)

    def test_rejects_bad_dimension(self):
        with pytest.raises(DomainError):
            a_ratio(1, 1.0)


class TestARatioInverse:
    """Tests for A_p^{-1}."""

    def test_zero(self):
        assert a_ratio_inv(2, 0.0) == 0.0

    def test_langevin(self):
        assert a_ratio_inv(3, langevin(2.0)) == pytest.approx(2.0, abs=1e-6)

    @pytest.mark.parametrize("p,x", [(2, 2.37), (3, 3.99), (2, 0.01), (5, 150.0), (3, 5000.0)])
    def test_inverts_forward_map(self, p, x):
        assert a_ratio_inv(p, a_ratio(p, x)) == pytest.approx(x, rel=1e-8)

    @pytest.mark.parametrize("p", [2, 3, 5])
    def test_inverts_forward_map_far_out(self, p):
        x = 5.0e6
        assert a_ratio_inv(p, a_ratio(p, x)) == pytest.approx(x, rel=1e-6)

    def test_near_one(self):
        r = 1.0 - 1e-13
        tail = 1.0 - r
        assert a_ratio_inv(2, r) == pytest.approx(1.0 / (2.0 * tail), rel=1e-9)
        assert a_ratio_inv(3, r) == pytest.approx(1.0 / tail, rel=1e-12)

    def test_continuous_across_branches(self):
        below, above = 1.0 - 0.5 / 0.999e6, 1.0 - 0.5 / 1.001e6
        assert a_ratio_inv(2, below) == pytest.approx(0.999e6, rel=1e-6)
        assert a_ratio_inv(2, above) == pytest.approx(1.001e6, rel=1e-6)

    @pytest.mark.parametrize("r", [-0.1, 1.0, 1.5, float("nan")])
    def test_rejects_out_of_range(self, r):
        with pytest.raises(DomainError):
            a_ratio_inv(2, r)


class TestARatioDerivative:
    """Tests for A_p'."""

    def test_finite_difference(self):
        h = 1e-6
        fd = (a_ratio(2, 1.0 + h) - a_ratio(2, 1.0 - h)) / (2 * h)
        assert a_ratio_deriv(2, 1.0) == pytest.approx(fd, abs=1e-6)

    def test_langevin_derivative(self):
        expected = 0.25 - 1.0 / np.sinh(2.0) ** 2
        assert a_ratio_deriv(3, 2.0) == pytest.approx(expected, rel=1e-10)

    def test_small_argument(self):
        value = a_ratio_deriv(2, 1e-8)
        assert 0 < value <= 0.5
        assert value == pytest.approx(0.5, abs=1e-6)

    def test_rejects_zero(self):
        with pytest.raises(DomainError):
            a_ratio_deriv(2, 0.0)


class TestNormalisingConstant:
    """Tests for log C_p(kappa)."""

    def test_uniform_circle(self):
        assert log_vmf_norm_const(2, 0.0) == pytest.approx(-np.log(2 * np.pi))

    def test_uniform_sphere(self):
        assert log_vmf_norm_const(3, 0.0) == pytest.approx(-np.log(4 * np.pi))

    def test_circle_normalisation(self):
        log_c = log_vmf_norm_const(2, 2.37)
        total = integrate_circle(lambda t: np.exp(log_c + 2.37 * np.cos(t)))
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_sphere_closed_form(self):
        kappa = 3.99
        expected = np.log(kappa) - np.log(4 * np.pi * np.sinh(kappa))
        assert log_vmf_norm_const(3, kappa) == pytest.approx(expected, rel=1e-12)

    def test_large_concentration_finite(self):
        assert np.isfinite(log_vmf_norm_const(3, 1.0e5))
        assert np.isfinite(log_sphere_exp_integral(10, 2.0e4))

    def test_negative_kappa(self):
        with pytest.raises(DomainError):
            log_vmf_norm_const(2, -1.0)


class TestSecondMomentCoefficients:
    """E[xx'] = a I + b zz' has unit trace."""

    @pytest.mark.parametrize("p,r", [(2, 0.0), (2, 1e-4), (3, 2.0), (5, 40.0)])
    def test_trace_is_one(self, p, r):
        iso, aniso = second_moment_coefficients(p, r)
        assert p * iso + aniso * r ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_matches_quadrature(self):
        zeta = np.array([1.5, -0.5])
        r = np.linalg.norm(zeta)
        iso, aniso = second_moment_coefficients(2, r)
        log_c = log_vmf_norm_const(2, r)

        def integrand(t):
            x = np.array([np.cos(t), np.sin(t)])
            return np.outer(x, x).ravel() * np.exp(log_c + zeta @ x)

        expected = iso * np.eye(2) + aniso * np.outer(zeta, zeta)
        assert integrate_circle(integrand) == pytest.approx(expected.ravel(), abs=1e-10)


class TestQuadrature:
    """Tests for the circle and sphere integration rules."""

    def test_circumference(self):
        assert integrate_circle(lambda t: 1.0) == pytest.approx(2 * np.pi, rel=1e-12)

    def test_sphere_area(self):
        assert integrate_sphere3(lambda x: 1.0) == pytest.approx(4 * np.pi, rel=1e-10)

    def test_axial_area(self):
        assert integrate_sphere3_axial(lambda t: 1.0) == pytest.approx(4 * np.pi, rel=1e-12)

    def test_vmf_density_integrates_to_one(self, circular_xi, spherical_xi):
        for xi in (circular_xi, spherical_xi):
            log_c = log_vmf_norm_const(xi.size, np.linalg.norm(xi))
            total = integrate_sphere(xi.size, lambda x: np.exp(log_c + xi @ x))
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_unsupported_dimension(self):
        with pytest.raises(DomainError):
            integrate_sphere(4, lambda x: 1.0)
