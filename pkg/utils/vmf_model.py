"""
The von Mises-Fisher model in natural parametrisation xi = kappa * mu
Density, contamination mixtures and their exponential moments, sampling,
outlier regions and the angle distribution used for Q-Q diagnostics
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy import integrate, optimize, special, stats

from utils.errors import DimensionMismatchError, DomainError
from utils.special_fns import (
    a_ratio,
    bessel_i_scaled,
    log_sphere_exp_integral,
    log_vmf_norm_const,
    quadrature,
    second_moment_coefficients,
)

logger = logging.getLogger(__name__)

UNIT_TOL = 1.0e-12


def as_natural_param(xi) -> np.ndarray:
    """Validate a natural parameter vector"""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim != 1 or xi.size < 2:
        raise DomainError(f"natural parameter must be a vector of length >= 2, got shape {xi.shape}")
    if not np.all(np.isfinite(xi)):
        raise DomainError("natural parameter must be finite")
    return xi


def concentration(xi) -> float:
    return float(np.linalg.norm(xi))


def mean_direction(xi) -> np.ndarray:
    """mu = xi/|xi|; undefined at xi = 0"""
    kappa = concentration(xi)
    if kappa == 0:
        raise DomainError("mean direction is undefined for xi = 0")
    return np.asarray(xi, dtype=float) / kappa


def as_unit_vectors(x, p: Optional[int] = None, tol: float = UNIT_TOL) -> np.ndarray:
    """
    Validate points on the sphere

    Args:
        x: One point (p,) or rows (n, p)
        p: Expected dimension
        tol: Allowed deviation of each norm from 1

    Returns:
        Float array with the same shape
    """
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2):
        raise DomainError(f"points must be a vector or a matrix, got shape {x.shape}")
    if p is not None and x.shape[-1] != p:
        raise DimensionMismatchError(f"expected points in R^{p}, got R^{x.shape[-1]}")
    norms = np.linalg.norm(x, axis=-1)
    if np.any(np.abs(norms - 1.0) > tol):
        raise DomainError("points must have unit norm")
    return x


@dataclass(frozen=True)
class Uniform:
    """Uniform law on the unit sphere in R^p"""

    p: int

    def __post_init__(self):
        if self.p < 2:
            raise DomainError("uniform law needs p >= 2")


@dataclass(frozen=True)
class MixtureModel:
    """
    (1 - epsilon) vMF(primary) + epsilon * contaminant

    contaminant is a natural parameter eta, or None for the uniform law
    (handled exactly as vMF(0)).
    """

    primary: np.ndarray
    epsilon: float = 0.0
    contaminant: Optional[np.ndarray] = None

    def __post_init__(self):
        primary = as_natural_param(self.primary)
        object.__setattr__(self, "primary", primary)
        if not 0.0 <= self.epsilon <= 1.0:
            raise DomainError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if self.contaminant is not None:
            eta = as_natural_param(self.contaminant)
            if eta.shape != primary.shape:
                raise DimensionMismatchError("primary and contaminant must share dimension")
            object.__setattr__(self, "contaminant", eta)

    @property
    def p(self) -> int:
        return self.primary.size

    @property
    def contaminant_param(self) -> np.ndarray:
        return np.zeros(self.p) if self.contaminant is None else self.contaminant

    def components(self) -> List[Tuple[float, np.ndarray]]:
        """(weight, natural parameter) pairs with positive weight"""
        parts = [(1.0 - self.epsilon, self.primary), (self.epsilon, self.contaminant_param)]
        return [(w, eta) for w, eta in parts if w > 0]

    def swapped(self) -> "MixtureModel":
        """Same law with the components listed in the other order"""
        return MixtureModel(self.contaminant_param, 1.0 - self.epsilon, self.primary)

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return sum(w * np.exp(log_density(eta, x)) for w, eta in self.components())

    def describe(self) -> dict:
        return {
            'primary': self.primary.tolist(),
            'epsilon': self.epsilon,
            'contaminant': 'uniform' if self.contaminant is None else self.contaminant.tolist(),
        }


def as_mixture(model: Union[np.ndarray, MixtureModel, Uniform, list, tuple]) -> MixtureModel:
    if isinstance(model, MixtureModel):
        return model
    if isinstance(model, Uniform):
        return MixtureModel(np.zeros(model.p))
    return MixtureModel(as_natural_param(model))


def log_density(xi, x) -> Union[float, np.ndarray]:
    """
    Log density of vMF(xi)

    Args:
        xi: Natural parameter in R^p
        x: One point (p,) or rows (n, p)

    Returns:
        log C_p(|xi|) + xi'x
    """
    xi = as_natural_param(xi)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != xi.size:
        raise DimensionMismatchError(f"xi has dimension {xi.size} but x has {x.shape[-1]}")
    value = log_vmf_norm_const(xi.size, concentration(xi)) + x @ xi
    return float(value) if np.ndim(value) == 0 else value


def density(xi, x) -> Union[float, np.ndarray]:
    return np.exp(log_density(xi, x))


def exp_moments(zeta) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Exponential moments of the sphere

    Returns:
        (log S0, S1/S0, S2/S0) for S_k = integral of exp(zeta'x) x^{(k)} dx
    """
    zeta = np.asarray(zeta, dtype=float)
    p = zeta.size
    r = concentration(zeta)
    log_s0 = log_sphere_exp_integral(p, r)
    iso, aniso = second_moment_coefficients(p, r)
    first = a_ratio(p, r) * zeta / r if r > 0 else np.zeros(p)
    second = iso * np.eye(p) + aniso * np.outer(zeta, zeta)
    return log_s0, first, second


def mixture_exp_moments(g: MixtureModel, a: float, xi, log_shift: float = 0.0
                        ) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    Integrals of exp(a xi'x + log_shift) times 1, x and xx' against dG

    Every component contributes w_k C(eta_k) S(a xi + eta_k), so the result
    involves only Bessel orders (p-2)/2 and p/2.

    Args:
        g: Mixture law G
        a: Exponent multiplier
        xi: Natural parameter
        log_shift: Constant added in the exponent

    Returns:
        (m0, m1, m2) with shapes (), (p,), (p, p)
    """
    xi = as_natural_param(xi)
    if xi.size != g.p:
        raise DimensionMismatchError("xi and the mixture must share dimension")
    m0 = 0.0
    m1 = np.zeros(g.p)
    m2 = np.zeros((g.p, g.p))
    for weight, eta in g.components():
        log_s0, first, second = exp_moments(a * xi + eta)
        scale = np.exp(np.log(weight) + log_vmf_norm_const(g.p, concentration(eta)) + log_s0 + log_shift)
        m0 += scale
        m1 += scale * first
        m2 += scale * second
    return m0, m1, m2


def make_rng(seed, *keys: int) -> np.random.Generator:
    """
    Random generator for the stream (seed, *keys)

    Distinct key tuples give independent streams, so replicates can be drawn
    in any order or process.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys)))


def _sample_uniform(p: int, n: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((n, p))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _sample_cosines(kappa: float, p: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Rejection sampler for w = mu'x under vMF, p >= 3"""
    dim = p - 1
    b = dim / (2.0 * kappa + np.sqrt(4.0 * kappa ** 2 + dim ** 2))
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + dim * np.log(1.0 - x0 ** 2)

    out = np.empty(n)
    filled = 0
    while filled < n:
        size = n - filled
        z = rng.beta(dim / 2.0, dim / 2.0, size=size)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.uniform(size=size)
        accepted = w[kappa * w + dim * np.log(1.0 - x0 * w) - c >= np.log(u)]
        out[filled:filled + accepted.size] = accepted
        filled += accepted.size
    return out


def _sample_vmf(xi: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    p = xi.size
    kappa = concentration(xi)
    if kappa == 0:
        return _sample_uniform(p, n, rng)
    if p == 2:
        angles = rng.vonmises(np.arctan2(xi[1], xi[0]), kappa, size=n)
        return np.column_stack([np.cos(angles), np.sin(angles)])

    mu = xi / kappa
    w = _sample_cosines(kappa, p, n, rng)
    v = rng.standard_normal((n, p))
    v -= np.outer(v @ mu, mu)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    x = w[:, None] * mu + np.sqrt(np.clip(1.0 - w ** 2, 0.0, None))[:, None] * v
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def sample(model, n: int, seed=None) -> np.ndarray:
    """
    Draw i.i.d. points from vMF(xi), a mixture, or the uniform law

    Args:
        model: Natural parameter, MixtureModel or Uniform
        n: Number of points (>= 1)
        seed: Integer seed or a numpy Generator

    Returns:
        Array (n, p) of unit vectors
    """
    if int(n) != n or n < 1:
        raise DomainError(f"sample size must be a positive integer, got {n}")
    n = int(n)
    rng = make_rng(seed)

    if isinstance(model, Uniform):
        return _sample_uniform(model.p, n, rng)
    if not isinstance(model, MixtureModel):
        return _sample_vmf(as_natural_param(model), n, rng)

    contaminated = rng.uniform(size=n) < model.epsilon
    out = np.empty((n, model.p))
    n_bad = int(contaminated.sum())
    if n - n_bad:
        out[~contaminated] = _sample_vmf(model.primary, n - n_bad, rng)
    if n_bad:
        out[contaminated] = _sample_vmf(model.contaminant_param, n_bad, rng)
    return out


def sphere_grid(p: int, size: int, seed: int = 0) -> np.ndarray:
    """
    Deterministic grid of points on the sphere

    p=2: equally spaced angles starting at -pi; p=3: Fibonacci lattice;
    higher p: seeded uniform draws.
    """
    if p == 2:
        theta = np.linspace(-np.pi, np.pi, size, endpoint=False)
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if p == 3:
        k = np.arange(size) + 0.5
        t = 1.0 - 2.0 * k / size
        phi = np.pi * (1.0 + np.sqrt(5.0)) * k
        s = np.sqrt(1.0 - t ** 2)
        return np.column_stack([t, s * np.cos(phi), s * np.sin(phi)])
    return _sample_uniform(p, size, make_rng(seed))


@dataclass(frozen=True)
class OutlierRegion:
    """Cap of probability alpha around -mu: x is an outlier iff mu'x < -cos(delta)"""

    delta: float
    alpha: float
    kappa: float
    p: int
    residual: float

    @property
    def threshold(self) -> float:
        return -np.cos(self.delta)


def _cap_mass_scaled(kappa: float, p: int, delta: float) -> float:
    """exp(-kappa) times the integral of exp(kappa t)(1-t^2)^{(p-3)/2} over [-1, -cos delta]"""
    if delta <= 0:
        return 0.0
    integrand = lambda w: np.exp(-kappa * (1.0 + np.cos(w))) * np.sin(w) ** (p - 2)
    return float(quadrature(integrand, 0.0, delta, epsabs=1.0e-15, epsrel=1.0e-13))


def _cap_target_scaled(kappa: float, p: int, alpha: float) -> float:
    nu = (p - 2) / 2.0
    return float(np.sqrt(np.pi) * alpha * bessel_i_scaled(nu, kappa)
                 * special.gamma((p - 1) / 2.0) * (kappa / 2.0) ** (-nu))


def outlier_delta(xi, alpha: float) -> OutlierRegion:
    """
    Outlier region of tail probability alpha

    Args:
        xi: Natural parameter with |xi| > 0
        alpha: Tail probability in (0, 1]

    Returns:
        OutlierRegion whose cap around -mu carries probability alpha
    """
    xi = as_natural_param(xi)
    kappa = concentration(xi)
    if kappa == 0:
        raise DomainError("outlier region needs |xi| > 0")
    if not 0 < alpha <= 1:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")

    p = xi.size
    target = _cap_target_scaled(kappa, p, alpha)
    if alpha == 1:
        return OutlierRegion(np.pi, 1.0, kappa, p, abs(_cap_mass_scaled(kappa, p, np.pi) - target))

    delta = optimize.brentq(lambda d: _cap_mass_scaled(kappa, p, d) - target, 0.0, np.pi,
                            xtol=1.0e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    residual = abs(_cap_mass_scaled(kappa, p, delta) - target)
    logger.debug("outlier delta %.12g for kappa=%.6g alpha=%.4g (residual %.2e)", delta, kappa, alpha, residual)
    return OutlierRegion(float(delta), float(alpha), kappa, p, residual)


def in_outlier_region(region: OutlierRegion, xi, x) -> Union[bool, np.ndarray]:
    """True where xi'x/|xi| < -cos(delta); x may hold one point or rows"""
    mu = mean_direction(as_natural_param(xi))
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != mu.size:
        raise DimensionMismatchError(f"xi has dimension {mu.size} but x has {x.shape[-1]}")
    flags = x @ mu < region.threshold
    return bool(flags) if np.ndim(flags) == 0 else flags


def outlier_delta_curve(p: int, kappas, alpha: float) -> pd.DataFrame:
    """delta as a function of the concentration for a fixed tail probability"""
    rows = []
    for kappa in kappas:
        xi = np.zeros(p)
        xi[0] = kappa
        rows.append({'kappa': float(kappa), 'alpha': alpha, 'delta': outlier_delta(xi, alpha).delta})
    return pd.DataFrame(rows, columns=['kappa', 'alpha', 'delta'])


@dataclass(frozen=True)
class AngleDistribution:
    """Tabulated law of omega = arccos(mu'X) under vMF with concentration kappa"""

    p: int
    kappa: float
    grid: np.ndarray
    cdf_values: np.ndarray

    def cdf(self, omega):
        return np.interp(omega, self.grid, self.cdf_values)

    def quantile(self, probs):
        return np.interp(probs, self.cdf_values, self.grid)


def angle_distribution(p: int, kappa: float, grid_size: int = 20001) -> AngleDistribution:
    """Law of the angle to the mean direction, tabulated by cumulative trapezoid"""
    grid = np.linspace(0.0, np.pi, grid_size)
    weights = np.exp(kappa * (np.cos(grid) - 1.0)) * np.sin(grid) ** (p - 2)
    cdf = integrate.cumulative_trapezoid(weights, grid, initial=0.0)
    cdf /= cdf[-1]
    return AngleDistribution(p, float(kappa), grid, cdf)


def residual_angles(xi, data) -> np.ndarray:
    mu = mean_direction(as_natural_param(xi))
    return np.arccos(np.clip(np.asarray(data, dtype=float) @ mu, -1.0, 1.0))


def qq_coordinates(xi, data) -> pd.DataFrame:
    """
    Model quantiles against sorted residual angles

    Returns:
        DataFrame with columns probability, model_quantile, empirical_quantile (radians)
    """
    omega = np.sort(residual_angles(xi, data))
    n = omega.size
    probs = (np.arange(1, n + 1) - 0.5) / n
    law = angle_distribution(np.asarray(xi).size, concentration(xi))
    return pd.DataFrame({
        'probability': probs,
        'model_quantile': law.quantile(probs),
        'empirical_quantile': omega,
    })


def angle_goodness_of_fit(xi, data) -> dict:
    """Kolmogorov-Smirnov test of the residual angles against the fitted model"""
    law = angle_distribution(np.asarray(xi).size, concentration(xi))
    result = stats.kstest(residual_angles(xi, data), law.cdf)
    return {'statistic': float(result.statistic), 'p_value': float(result.pvalue)}
