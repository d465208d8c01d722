"""
Influence functions and sandwich covariances of the vMF estimators
psi functions, the M and Q matrices in closed mixture form, and M^{-1} Q M^{-T}
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from scipy import linalg, special

from utils.errors import DomainError, SingularMatrixError
from utils.estimators import ESTIMATORS
from utils.special_fns import a_ratio, a_ratio_deriv, log_vmf_norm_const
from utils.vmf_model import (
    MixtureModel,
    as_mixture,
    as_natural_param,
    concentration,
    mixture_exp_moments,
    sphere_grid,
)

logger = logging.getLogger(__name__)

SINGULAR_RTOL = 1.0e-13


def _check_kind(kind: str, tuning: float):
    if kind not in ESTIMATORS:
        raise DomainError(f"kind must be one of {ESTIMATORS}, got {kind}")
    if tuning < 0:
        raise DomainError(f"tuning must be nonnegative, got {tuning}")


def _direction(xi) -> tuple:
    xi = as_natural_param(xi)
    kappa = concentration(xi)
    if kappa == 0:
        raise DomainError("psi is undefined at xi = 0 (mean direction undefined)")
    return xi, kappa, xi / kappa


def _type1_terms(p: int, kappa: float, beta: float):
    """
    D(kappa) = h(kappa) [A(b kappa) - A(kappa)] with h = I_nu(b kappa)/(b^nu I_nu(kappa)),
    b = 1 + beta, together with dD/dkappa
    """
    nu = (p - 2) / 2.0
    b = 1.0 + beta
    a, a_b = a_ratio(p, kappa), a_ratio(p, b * kappa)
    h = np.exp(np.log(special.ive(nu, b * kappa)) - np.log(special.ive(nu, kappa))
               + beta * kappa - nu * np.log(b))
    dh = h * (b * a_b - a)
    d = h * (a_b - a)
    dd = dh * (a_b - a) + h * (b * a_ratio_deriv(p, b * kappa) - a_ratio_deriv(p, kappa))
    return d, dd


def psi(kind: str, tuning: float, xi, x) -> np.ndarray:
    """
    Estimating function of an estimator

    mle:   x - A(k) u
    type1: exp(beta xi'x)(x - A(k) u) - D u
    type0: C(k)^gamma exp(gamma xi'x)(x - A((1+gamma)k) u)

    Args:
        kind: mle, type1 or type0
        tuning: beta or gamma (ignored for mle)
        xi: Natural parameter with |xi| > 0
        x: One point (p,) or rows (n, p)

    Returns:
        Array with the shape of x
    """
    _check_kind(kind, tuning)
    xi, kappa, u = _direction(xi)
    p = xi.size
    x = np.asarray(x, dtype=float)
    proj = x @ xi

    if kind == "mle" or tuning == 0:
        return x - a_ratio(p, kappa) * u
    if kind == "type1":
        d, _ = _type1_terms(p, kappa, tuning)
        weight = np.exp(tuning * proj)
        return np.multiply.outer(weight, np.ones(p)) * (x - a_ratio(p, kappa) * u) - d * u
    weight = np.exp(tuning * log_vmf_norm_const(p, kappa) + tuning * proj)
    return np.multiply.outer(weight, np.ones(p)) * (x - a_ratio(p, (1.0 + tuning) * kappa) * u)


def _mean_jacobian(p: int, kappa: float, u: np.ndarray, scale: float = 1.0):
    """d(A(scale k) u)/dxi' = scale A'(scale k) uu' + (A(scale k)/k)(I - uu')"""
    uu = np.outer(u, u)
    return (scale * a_ratio_deriv(p, scale * kappa) * uu
            + a_ratio(p, scale * kappa) / kappa * (np.eye(p) - uu))


def m_matrix(kind: str, tuning: float, xi, g) -> np.ndarray:
    """
    M = -integral of d psi / d xi' dG, in closed mixture form

    Args:
        kind: mle, type1 or type0
        tuning: beta or gamma
        xi: Natural parameter with |xi| > 0
        g: Law G (MixtureModel, or a natural parameter for a pure vMF)

    Returns:
        p x p matrix
    """
    _check_kind(kind, tuning)
    xi, kappa, u = _direction(xi)
    g = as_mixture(g)
    p = xi.size
    if g.p != p:
        raise DomainError("xi and G must share dimension")

    if kind == "mle" or tuning == 0:
        return _mean_jacobian(p, kappa, u)

    if kind == "type1":
        beta = tuning
        a = a_ratio(p, kappa)
        d, dd = _type1_terms(p, kappa, beta)
        m0, m1, m2 = mixture_exp_moments(g, beta, xi)
        uu = np.outer(u, u)
        return (-beta * (m2 - a * np.outer(u, m1)) + m0 * _mean_jacobian(p, kappa, u)
                + dd * uu + d / kappa * (np.eye(p) - uu))

    gamma = tuning
    b = 1.0 + gamma
    a, a_b = a_ratio(p, kappa), a_ratio(p, b * kappa)
    m0, m1, m2 = mixture_exp_moments(g, gamma, xi, log_shift=gamma * log_vmf_norm_const(p, kappa))
    outer = m2 - a * np.outer(m1, u) - a_b * np.outer(u, m1) + a * a_b * m0 * np.outer(u, u)
    return -gamma * outer + m0 * _mean_jacobian(p, kappa, u, scale=b)


def _centred_second_moment(m0, m1, m2, u, centre):
    """integral of (x - centre u)(x - centre u)' from raw moments"""
    return m2 - centre * (np.outer(u, m1) + np.outer(m1, u)) + centre ** 2 * m0 * np.outer(u, u)


def q_matrix(kind: str, tuning: float, xi, g) -> np.ndarray:
    """
    Q = integral of psi psi' dG, in closed mixture form

    Returns:
        Symmetric positive semidefinite p x p matrix
    """
    _check_kind(kind, tuning)
    xi, kappa, u = _direction(xi)
    g = as_mixture(g)
    p = xi.size
    if g.p != p:
        raise DomainError("xi and G must share dimension")

    if kind == "mle" or tuning == 0:
        q = _centred_second_moment(*mixture_exp_moments(g, 0.0, xi), u, a_ratio(p, kappa))
    elif kind == "type1":
        beta = tuning
        a = a_ratio(p, kappa)
        d, _ = _type1_terms(p, kappa, beta)
        q = _centred_second_moment(*mixture_exp_moments(g, 2.0 * beta, xi), u, a)
        m0, m1, _ = mixture_exp_moments(g, beta, xi)
        v = m1 - a * m0 * u
        q = q - d * (np.outer(v, u) + np.outer(u, v)) + d ** 2 * np.outer(u, u)
    else:
        gamma = tuning
        shift = 2.0 * gamma * log_vmf_norm_const(p, kappa)
        q = _centred_second_moment(*mixture_exp_moments(g, 2.0 * gamma, xi, log_shift=shift),
                                   u, a_ratio(p, (1.0 + gamma) * kappa))
    return 0.5 * (q + q.T)


@dataclass
class SandwichParts:
    """M, Q and V = M^{-1} Q M^{-T} with the conditioning of M"""

    m: np.ndarray
    q: np.ndarray
    v: Optional[np.ndarray]
    m_inverse: Optional[np.ndarray]
    condition_number: float
    singular: bool = False
    warning: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            'm': self.m.tolist(),
            'q': self.q.tolist(),
            'v': None if self.v is None else self.v.tolist(),
            'condition_number': self.condition_number,
            'singular': self.singular,
            'warning': self.warning,
        }


def invert_with_condition(m: np.ndarray):
    """
    Inverse through the singular value decomposition

    Returns:
        (inverse or None, condition number)
    """
    u, s, vt = linalg.svd(m)
    if s[-1] <= SINGULAR_RTOL * s[0]:
        return None, float("inf") if s[-1] == 0 else float(s[0] / s[-1])
    return (vt.T / s) @ u.T, float(s[0] / s[-1])


def asymptotic_cov(kind: str, tuning: float, xi, g) -> SandwichParts:
    """
    Asymptotic covariance of sqrt(n)(xi_hat - xi)

    A singular M yields v = None with a warning instead of raising.
    """
    m = m_matrix(kind, tuning, xi, g)
    q = q_matrix(kind, tuning, xi, g)
    m_inv, cond = invert_with_condition(m)
    if m_inv is None:
        message = f"M is numerically singular (condition number {cond:.3g})"
        logger.warning(message)
        return SandwichParts(m, q, None, None, cond, singular=True, warning=message)
    return SandwichParts(m, q, m_inv @ q @ m_inv.T, m_inv, cond)


def influence(kind: str, tuning: float, xi, g, x) -> np.ndarray:
    """
    Influence function M^{-1} psi(x)

    Args:
        kind, tuning, xi, g: as m_matrix
        x: One point (p,) or rows (n, p)

    Returns:
        Array with the shape of x

    Raises:
        SingularMatrixError: M cannot be inverted
    """
    m = m_matrix(kind, tuning, xi, g)
    m_inv, cond = invert_with_condition(m)
    if m_inv is None:
        raise SingularMatrixError(f"M is numerically singular (condition number {cond:.3g})", cond)
    return psi(kind, tuning, xi, x) @ m_inv.T


def influence_grid(kind: str, tuning: float, xi, g, grid_size: int = 360) -> pd.DataFrame:
    """
    Influence function sampled on a sphere grid

    Returns:
        DataFrame with columns x1..xp, if1..ifp, if_norm
    """
    xi = as_natural_param(xi)
    p = xi.size
    points = sphere_grid(p, grid_size)
    values = influence(kind, tuning, xi, g, points)
    frame = pd.DataFrame(points, columns=[f"x{i + 1}" for i in range(p)])
    for i in range(p):
        frame[f"if{i + 1}"] = values[:, i]
    frame['if_norm'] = np.linalg.norm(values, axis=1)
    return frame


def estimating_residual(kind: str, tuning: float, xi, data, weights=None) -> float:
    """Norm of the weighted mean of psi over the data"""
    values = psi(kind, tuning, xi, np.asarray(data, dtype=float))
    w = np.ones(values.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    return float(np.linalg.norm(w @ values / w.sum()))
