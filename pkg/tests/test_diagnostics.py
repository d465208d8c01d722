"""Tests for psi functions, M/Q matrices, sandwich covariances and influence functions"""

import numpy as np
import pytest

from utils import diagnostics
from utils.diagnostics import (
    asymptotic_cov,
    influence,
    influence_grid,
    invert_with_condition,
    m_matrix,
    psi,
    q_matrix,
)
from utils.errors import DomainError, SingularMatrixError
from utils.estimators import EstimatorConfig, fit
from utils.special_fns import a_ratio, a_ratio_deriv, integrate_circle, integrate_sphere
from utils.vmf_model import MixtureModel, density, make_rng, sample

KINDS = [("mle", 0.0), ("type1", 0.3), ("type0", 0.3)]


def circle_expectation(func, g):
    """Integral of func(x) g(x) over the circle; func may return an array"""
    return integrate_circle(lambda t: np.ravel(func(np.array([np.cos(t), np.sin(t)])))
                            * g.density(np.array([np.cos(t), np.sin(t)])))


def numeric_m(kind, tuning, xi, g, h=1e-5):
    """-integral of d psi/d xi' dG by central differences inside the quadrature"""
    p = xi.size

    def jacobian(x):
        columns = []
        for j in range(p):
            step = np.zeros(p)
            step[j] = h
            columns.append((psi(kind, tuning, xi + step, x) - psi(kind, tuning, xi - step, x)) / (2 * h))
        return -np.column_stack(columns)

    return circle_expectation(jacobian, g).reshape(p, p)


class TestPsi:
    """Tests for the estimating functions."""

    def test_small_beta_is_mle(self, circular_xi):
        x = np.array([[0.6, 0.8], [-1.0, 0.0]])
        assert psi("type1", 1e-8, circular_xi, x) == pytest.approx(psi("mle", 0.0, circular_xi, x), abs=1e-6)

    @pytest.mark.parametrize("kind,tuning", KINDS)
    def test_fisher_consistent_circle(self, circular_xi, kind, tuning):
        g = MixtureModel(circular_xi)
        mean = circle_expectation(lambda x: psi(kind, tuning, circular_xi, x), g)
        assert mean == pytest.approx(np.zeros(2), abs=1e-8)

    @pytest.mark.parametrize("kind", ["type1", "type0"])
    def test_fisher_consistent_sphere(self, spherical_xi, kind):
        mean = integrate_sphere(3, lambda x: psi(kind, 0.25, spherical_xi, x) * density(spherical_xi, x))
        assert mean == pytest.approx(np.zeros(3), abs=1e-8)

    def test_shape(self, circular_xi):
        assert psi("type0", 0.5, circular_xi, np.array([1.0, 0.0])).shape == (2,)
        assert psi("type0", 0.5, circular_xi, np.eye(2)).shape == (2, 2)

    def test_undefined_at_zero(self):
        with pytest.raises(DomainError):
            psi("mle", 0.0, np.zeros(2), np.array([1.0, 0.0]))


class TestMMatrix:
    """Tests for M = -integral of d psi/d xi' dG."""

    def test_mle_numeric_jacobian(self, circular_xi):
        expected = numeric_m("mle", 0.0, circular_xi, MixtureModel(circular_xi))
        assert m_matrix("mle", 0.0, circular_xi, circular_xi) == pytest.approx(expected, abs=1e-6)

    def test_small_beta_is_fisher_information(self, circular_xi):
        assert m_matrix("type1", 1e-8, circular_xi, circular_xi) == \
            pytest.approx(m_matrix("mle", 0.0, circular_xi, circular_xi), abs=1e-6)

    def test_type0_vmf_contamination(self, circular_xi):
        g = MixtureModel(circular_xi, 0.1, np.array([-100.0, 0.0]))
        expected = numeric_m("type0", 0.25, circular_xi, g)
        assert m_matrix("type0", 0.25, circular_xi, g) == pytest.approx(expected, abs=1e-6)

    @pytest.mark.parametrize("kind", ["type1", "type0"])
    def test_off_model_point(self, kind):
        """Closed form agrees with quadrature away from the fitted law."""
        xi = np.array([1.2, 0.9])
        g = MixtureModel(np.array([2.37, 0.0]), 0.2)
        expected = numeric_m(kind, 0.4, xi, g)
        assert m_matrix(kind, 0.4, xi, g) == pytest.approx(expected, abs=1e-6)


class TestQMatrix:
    """Tests for Q = integral of psi psi' dG."""

    @pytest.mark.parametrize("kind,tuning", KINDS)
    def test_circle_quadrature(self, circular_xi, kind, tuning):
        g = MixtureModel(circular_xi, 0.1, np.array([-3.0, 1.0]))
        xi = np.array([2.0, 0.3])
        expected = circle_expectation(lambda x: np.outer(psi(kind, tuning, xi, x), psi(kind, tuning, xi, x)), g)
        assert q_matrix(kind, tuning, xi, g) == pytest.approx(expected.reshape(2, 2), abs=1e-6)

    @pytest.mark.parametrize("kind", ["type1", "type0"])
    def test_sphere_quadrature(self, spherical_xi, kind):
        g = MixtureModel(spherical_xi, 0.2)

        def integrand(x):
            value = psi(kind, 0.25, spherical_xi, x)
            return np.outer(value, value).ravel() * g.density(x)

        expected = integrate_sphere(3, integrand).reshape(3, 3)
        assert q_matrix(kind, 0.25, spherical_xi, g) == pytest.approx(expected, abs=1e-6)

    def test_information_identity(self, circular_xi):
        assert q_matrix("type1", 1e-8, circular_xi, circular_xi) == \
            pytest.approx(m_matrix("type1", 1e-8, circular_xi, circular_xi), abs=1e-6)

    def test_symmetric(self, circular_xi):
        q = q_matrix("type1", 0.5, np.array([1.0, 2.0]), MixtureModel(circular_xi, 0.3))
        assert np.array_equal(q, q.T)


class TestSandwich:
    """Tests for V = M^{-1} Q M^{-T}."""

    def test_mle_at_model_is_inverse_information(self, circular_xi):
        parts = asymptotic_cov("mle", 0.0, circular_xi, circular_xi)
        assert parts.v == pytest.approx(np.linalg.inv(parts.m), abs=1e-8)
        assert not parts.singular

    def test_small_tuning_costs_little_efficiency(self, circular_xi):
        v_mle = asymptotic_cov("mle", 0.0, circular_xi, circular_xi).v
        v_beta = asymptotic_cov("type1", 0.02, circular_xi, circular_xi).v
        assert 0.98 < np.trace(v_beta) / np.trace(v_mle) < 1.05

    def test_singular_m_reported(self, circular_xi, monkeypatch):
        monkeypatch.setattr(diagnostics, "m_matrix", lambda *args: np.zeros((2, 2)))
        parts = asymptotic_cov("type1", 0.3, circular_xi, circular_xi)
        assert parts.singular
        assert parts.v is None
        assert parts.warning
        assert parts.to_dict()['v'] is None

    @pytest.mark.slow
    def test_matches_monte_carlo(self, circular_xi):
        """Empirical covariance of sqrt(n)(xi_hat - xi) for type 1 agrees with V."""
        n, replicates, beta = 2000, 4000, 0.1
        estimates = np.array([
            fit("type1", sample(circular_xi, n, seed=make_rng(31, r)), beta).raise_for_status().xi_hat
            for r in range(replicates)
        ])
        scaled = np.sqrt(n) * (estimates - circular_xi)
        empirical = scaled.T @ scaled / replicates
        v = asymptotic_cov("type1", beta, circular_xi, circular_xi).v
        assert np.diag(empirical) / np.diag(v) == pytest.approx([1.0, 1.0], abs=0.1)

    def test_condition_number(self):
        inverse, cond = invert_with_condition(np.diag([4.0, 2.0]))
        assert cond == pytest.approx(2.0)
        assert inverse == pytest.approx(np.diag([0.25, 0.5]))


class TestInfluence:
    """Tests for the influence function."""

    @pytest.mark.parametrize("kind,tuning", KINDS)
    def test_contamination_derivative(self, circular_xi, kind, tuning):
        """Refitting on (1 - eps) G + eps delta_x reproduces IF(x) to first order."""
        atoms = 2000
        theta = np.linspace(-np.pi, np.pi, atoms, endpoint=False)
        points = np.column_stack([np.cos(theta), np.sin(theta)])
        weights = density(circular_xi, points)
        weights = weights / weights.sum()
        x0 = np.array([np.cos(2.0), np.sin(2.0)])
        config = EstimatorConfig(max_iter=5000, tol=1e-12)

        eps = 1e-5
        data = np.vstack([points, x0])
        base = fit(kind, data, tuning, config, np.append(weights, 0.0)).xi_hat
        bumped = fit(kind, data, tuning, config, np.append((1 - eps) * weights, eps)).xi_hat

        expected = influence(kind, tuning, circular_xi, circular_xi, x0)
        assert (bumped - base) / eps == pytest.approx(expected, rel=1e-2, abs=1e-3)

    def test_mle_peak_opposite_mean(self, circular_xi):
        frame = influence_grid("mle", 0.0, circular_xi, circular_xi, 3600)
        peak = frame.loc[frame['if_norm'].idxmax(), ['x1', 'x2']].to_numpy(dtype=float)
        assert peak == pytest.approx([-1.0, 0.0], abs=1e-9)

    def test_mle_trough_off_mean(self, circular_xi):
        """At moderate concentration the MLE influence is smallest away from mu."""
        kappa = 2.37
        a, da = a_ratio(2, kappa), a_ratio_deriv(2, kappa)
        trough_cos = a / (1.0 - (kappa * da / a) ** 2)
        assert trough_cos == pytest.approx(0.878, abs=1e-3)

        frame = influence_grid("mle", 0.0, circular_xi, circular_xi, 3600)
        low = frame.loc[frame['if_norm'].idxmin()]
        assert low['x1'] == pytest.approx(trough_cos, abs=2e-3)
        at_mean = np.linalg.norm(influence("mle", 0.0, circular_xi, circular_xi, np.array([1.0, 0.0])))
        assert low['if_norm'] < at_mean

    def test_mle_spread_grows_with_concentration(self):
        spreads = []
        for kappa in (1.0, 5.0, 20.0, 100.0):
            xi = np.array([kappa, 0.0])
            norms = influence_grid("mle", 0.0, xi, xi, 3600)['if_norm']
            spreads.append(norms.max() - norms.min())
        assert np.all(np.diff(spreads) > 0)

    def test_singular_raises(self, circular_xi, monkeypatch):
        monkeypatch.setattr(diagnostics, "m_matrix", lambda *args: np.zeros((2, 2)))
        with pytest.raises(SingularMatrixError):
            influence("mle", 0.0, circular_xi, circular_xi, np.array([1.0, 0.0]))

    def test_grid_columns(self, circular_xi, spherical_xi):
        frame = influence_grid("type1", 0.3, circular_xi, MixtureModel(circular_xi, 0.1), 72)
        assert list(frame.columns) == ['x1', 'x2', 'if1', 'if2', 'if_norm']
        assert len(frame) == 72
        sphere = influence_grid("type0", 0.3, spherical_xi, spherical_xi, 50)
        assert len(sphere) == 50
        assert np.all(sphere['if_norm'] >= 0)
