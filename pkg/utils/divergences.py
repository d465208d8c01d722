"""
Density power divergences between a vMF model and contamination mixtures
KL, the beta (Basu et al.) and gamma (Jones et al.) divergences, and the
point-mass losses used by cross-validation
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy import special

from utils.errors import DomainError
from utils.special_fns import a_ratio, integrate_sphere, log_vmf_norm_const
from utils.vmf_model import (
    MixtureModel,
    as_mixture,
    as_natural_param,
    concentration,
    exp_moments,
    log_density,
    mixture_exp_moments,
)

logger = logging.getLogger(__name__)

TUNING_KINDS = ("beta", "gamma")


@dataclass(frozen=True)
class TuningParam:
    """beta (type 1) or gamma (type 0) tuning value; 0 is the KL/MLE limit"""

    value: float
    kind: str = "beta"

    def __post_init__(self):
        if self.kind not in TUNING_KINDS:
            raise DomainError(f"tuning kind must be one of {TUNING_KINDS}, got {self.kind}")
        if not np.isfinite(self.value) or self.value < 0:
            raise DomainError(f"tuning value must be nonnegative, got {self.value}")


@dataclass
class DivergenceValue:
    """
    Divergence with its additive terms

    value is None when a g-only term could not be evaluated; the remaining
    terms are still reported and complete is False.
    """

    value: Optional[float]
    terms: Dict[str, Optional[float]] = field(default_factory=dict)
    complete: bool = True


def log_vmf_power_integral(p: int, xi, a: float) -> float:
    xi = as_natural_param(xi)
    if xi.size != p:
        raise DomainError(f"xi has dimension {xi.size}, expected {p}")
    if a < 1:
        raise DomainError(f"power a must be >= 1, got {a}")
    kappa = concentration(xi)
    if a == 1:
        return 0.0
    return a * log_vmf_norm_const(p, kappa) + exp_moments(a * xi)[0]


def vmf_power_integral(p: int, xi, a: float) -> float:
    """
    Integral of f_xi^a over the sphere

    Args:
        p: Dimension
        xi: Natural parameter
        a: Power >= 1

    Returns:
        C^a (2 pi)^{p/2} I_nu(a|xi|) / (a|xi|)^nu, evaluated in log space
    """
    return float(np.exp(log_vmf_power_integral(p, xi, a)))


def _is_integer(a: float) -> bool:
    return float(a).is_integer()


def integral_g_power(g: MixtureModel, a: float) -> Optional[float]:
    """
    Integral of g^a for a two-component mixture

    Closed form when a is an integer (binomial expansion) or g has a single
    component; quadrature for p in (2, 3); None otherwise.
    """
    if a == 1:
        return 1.0
    components = g.components()
    if len(components) == 1:
        weight, eta = components[0]
        return weight ** a * vmf_power_integral(g.p, eta, a)

    if _is_integer(a):
        (w1, xi), (w2, eta) = components
        a = int(a)
        log_c1 = log_vmf_norm_const(g.p, concentration(xi))
        log_c2 = log_vmf_norm_const(g.p, concentration(eta))
        total = 0.0
        for j in range(a + 1):
            log_term = (np.log(special.comb(a, j)) + j * (np.log(w1) + log_c1)
                        + (a - j) * (np.log(w2) + log_c2) + exp_moments(j * xi + (a - j) * eta)[0])
            total += np.exp(log_term)
        return float(total)

    if g.p in (2, 3):
        return float(integrate_sphere(g.p, lambda x: g.density(x) ** a))

    logger.info("integral of g^%.4g unavailable for p=%d", a, g.p)
    return None


def _entropy_term(g: MixtureModel) -> Optional[float]:
    """Integral of g log g"""
    components = g.components()
    if len(components) == 1:
        weight, eta = components[0]
        kappa = concentration(eta)
        return float(log_vmf_norm_const(g.p, kappa) + kappa * a_ratio(g.p, kappa))
    if g.p in (2, 3):
        return float(integrate_sphere(g.p, lambda x: g.density(x) * np.log(g.density(x))))
    return None


def kl_divergence(g, xi) -> DivergenceValue:
    """
    KL divergence d_KL(g, f_xi) = integral of g log(g / f_xi)

    The cross term is closed form through the mixture mean; the entropy of g
    is closed form for a single component and by quadrature otherwise.
    """
    g = as_mixture(g)
    xi = as_natural_param(xi)
    _, mean, _ = mixture_exp_moments(g, 0.0, xi)
    cross = log_vmf_norm_const(g.p, concentration(xi)) + float(xi @ mean)
    entropy = _entropy_term(g)
    terms = {'g_log_g': entropy, 'g_log_f': cross}
    if entropy is None:
        return DivergenceValue(None, terms, complete=False)
    return DivergenceValue(entropy - cross, terms)


def beta_divergence_vs_mixture(beta: float, xi, g) -> DivergenceValue:
    """
    Basu et al. divergence d_beta(g, f_xi)

    d = 1/(beta(1+beta)) int g^{1+beta} - (1/beta) int g f^beta + 1/(1+beta) int f^{1+beta}

    Args:
        beta: Tuning value > 0
        xi: Natural parameter
        g: Mixture (or single natural parameter)

    Returns:
        DivergenceValue with terms g_power, cross and model_power
    """
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta}")
    g = as_mixture(g)
    xi = as_natural_param(xi)
    p = g.p
    log_c = log_vmf_norm_const(p, concentration(xi))

    m0, _, _ = mixture_exp_moments(g, beta, xi, log_shift=beta * log_c)
    cross = -m0 / beta
    model_power = vmf_power_integral(p, xi, 1.0 + beta) / (1.0 + beta)
    g_power = integral_g_power(g, 1.0 + beta)

    terms = {'cross': cross, 'model_power': model_power}
    if g_power is None:
        terms['g_power'] = None
        return DivergenceValue(None, terms, complete=False)
    terms['g_power'] = g_power / (beta * (1.0 + beta))
    return DivergenceValue(terms['g_power'] + cross + model_power, terms)


def gamma_divergence_vs_mixture(gamma: float, xi, g) -> DivergenceValue:
    """
    Jones et al. divergence d_gamma(g, f_xi)

    d = 1/(gamma(1+gamma)) log int g^{1+gamma} - (1/gamma) log int g f^gamma
        + 1/(1+gamma) log int f^{1+gamma}
    """
    if gamma <= 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    g = as_mixture(g)
    xi = as_natural_param(xi)
    p = g.p
    log_c = log_vmf_norm_const(p, concentration(xi))

    m0, _, _ = mixture_exp_moments(g, gamma, xi, log_shift=gamma * log_c)
    if m0 <= 0:
        raise DomainError("integral of g f^gamma must be positive")
    cross = -np.log(m0) / gamma
    model_power = log_vmf_power_integral(p, xi, 1.0 + gamma) / (1.0 + gamma)
    g_power = integral_g_power(g, 1.0 + gamma)

    terms = {'cross': float(cross), 'model_power': float(model_power)}
    if g_power is None:
        terms['g_power'] = None
        return DivergenceValue(None, terms, complete=False)
    if g_power <= 0:
        raise DomainError("integral of g^{1+gamma} must be positive")
    terms['g_power'] = float(np.log(g_power) / (gamma * (1.0 + gamma)))
    return DivergenceValue(terms['g_power'] + terms['cross'] + terms['model_power'], terms)


def pointwise_cv_loss(kind: str, loss_param: float, fitted, x) -> np.ndarray:
    """
    Loss of a held-out point under the fitted density

    The g-only term of the divergence from a point mass is dropped, leaving
    beta: -(1/b) f(x)^b + 1/(1+b) int f^{1+b}
    gamma: -log f(x) + 1/(1+b) log int f^{1+b}

    Args:
        kind: 'beta' or 'gamma'
        loss_param: Divergence parameter b > 0
        fitted: Fitted natural parameter
        x: One point or rows of points

    Returns:
        Loss per point (float for a single point)
    """
    if kind not in TUNING_KINDS:
        raise DomainError(f"loss kind must be one of {TUNING_KINDS}, got {kind}")
    if loss_param <= 0:
        raise DomainError(f"loss parameter must be positive, got {loss_param}")
    fitted = as_natural_param(fitted)
    p = fitted.size
    log_f = log_density(fitted, x)
    if not np.all(np.isfinite(log_f)):
        raise DomainError("fitted density is not finite at the evaluation point")

    if kind == "beta":
        loss = (-np.exp(loss_param * log_f) / loss_param
                + vmf_power_integral(p, fitted, 1.0 + loss_param) / (1.0 + loss_param))
    else:
        loss = -log_f + log_vmf_power_integral(p, fitted, 1.0 + loss_param) / (1.0 + loss_param)
    return float(loss) if np.ndim(loss) == 0 else loss
