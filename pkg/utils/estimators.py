"""
Point estimators of the vMF natural parameter
Maximum likelihood, the type 1 (beta-divergence) and type 0 (gamma-divergence)
fixed-point estimators, and Lenth's circular M-estimator
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import special

from utils.divergences import log_vmf_power_integral
from utils.errors import DegenerateDataError, DomainError, NonConvergenceError
from utils.special_fns import a_ratio, a_ratio_inv, integrate_circle, log_vmf_norm_const
from utils.vmf_model import as_natural_param, concentration

logger = logging.getLogger(__name__)

DEGENERATE_RESULTANT = 1.0e-12
ESTIMATORS = ("mle", "type1", "type0")


@dataclass(frozen=True)
class EstimatorConfig:
    """Stopping rule and starting point of a fixed-point run; init None means MLE"""

    max_iter: int = 500
    tol: float = 1.0e-10
    init: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.init is not None:
            object.__setattr__(self, "init", tuple(float(v) for v in self.init))


@dataclass
class FitResult:
    """
    Estimate of xi with its iteration history

    status is one of converged, max_iter, diverged; flags carries notes such
    as undefined_direction for a zero resultant.
    """

    xi_hat: np.ndarray
    estimator: str
    tuning: float = 0.0
    iterations: int = 0
    converged: bool = True
    status: str = "converged"
    step_trace: List[float] = field(default_factory=list)
    objective_trace: List[float] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)

    @property
    def kappa_hat(self) -> float:
        return concentration(self.xi_hat)

    @property
    def mu_hat(self) -> Optional[float]:
        """Direction angle atan2(xi_2, xi_1) for circular data"""
        if self.xi_hat.size != 2:
            return None
        return float(np.arctan2(self.xi_hat[1], self.xi_hat[0]))

    def raise_for_status(self) -> "FitResult":
        if not self.converged:
            raise NonConvergenceError(
                f"{self.estimator} fit stopped after {self.iterations} iterations ({self.status})",
                result=self,
            )
        return self

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['xi_hat'] = self.xi_hat.tolist()
        data['kappa_hat'] = self.kappa_hat
        data['mu_hat'] = self.mu_hat
        return data


def _prepare(data, weights=None) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 2:
        raise DomainError(f"data must be an (n, p) array with n >= 1 and p >= 2, got shape {x.shape}")
    if weights is None:
        return x, np.ones(x.shape[0])
    w = np.asarray(weights, dtype=float)
    if w.shape != (x.shape[0],) or np.any(w < 0) or not w.sum() > 0:
        raise DomainError("weights must be nonnegative, one per point, with a positive sum")
    return x, w * (x.shape[0] / w.sum())


def _check_not_degenerate(x: np.ndarray, w: np.ndarray):
    r_bar = np.linalg.norm(w @ x) / w.sum()
    if r_bar >= 1.0 - DEGENERATE_RESULTANT:
        raise DegenerateDataError("all observations coincide; the concentration is unbounded")
    return r_bar


def fit_mle(data, weights=None) -> FitResult:
    """
    Maximum likelihood estimate A_p^{-1}(R) S/|S|

    Args:
        data: (n, p) unit vectors
        weights: Optional nonnegative observation weights

    Returns:
        FitResult; a zero resultant gives xi = 0 flagged undefined_direction
    """
    x, w = _prepare(data, weights)
    p = x.shape[1]
    resultant = w @ x
    r_bar = _check_not_degenerate(x, w)
    if r_bar < DEGENERATE_RESULTANT:
        logger.info("resultant vanishes; returning xi = 0")
        return FitResult(np.zeros(p), "mle", flags=["undefined_direction"])
    xi = a_ratio_inv(p, r_bar) * resultant / np.linalg.norm(resultant)
    return FitResult(xi, "mle")


def _scaled_weights(x: np.ndarray, xi: np.ndarray, a: float) -> np.ndarray:
    """exp(a (xi'x - |xi|)), i.e. exp(a xi'x) scaled to at most 1"""
    return np.exp(a * (x @ xi - concentration(xi)))


def type1_correction_scaled(p: int, kappa: float, beta: float) -> float:
    """
    exp(-beta kappa) times the type 1 correction
    D = I_nu((1+beta)kappa) / ((1+beta)^nu I_nu(kappa)) [A((1+beta)kappa) - A(kappa)]
    """
    if kappa == 0 or beta == 0:
        return 0.0
    nu = (p - 2) / 2.0
    b = 1.0 + beta
    log_h = np.log(special.ive(nu, b * kappa)) - np.log(special.ive(nu, kappa)) - nu * np.log(b)
    return float(np.exp(log_h) * (a_ratio(p, b * kappa) - a_ratio(p, kappa)))


def _initial_point(x: np.ndarray, w: np.ndarray, config: EstimatorConfig) -> np.ndarray:
    if config.init is None:
        return fit_mle(x, w).xi_hat
    init = as_natural_param(config.init)
    if init.size != x.shape[1]:
        raise DomainError(f"init has dimension {init.size}, data have {x.shape[1]}")
    return init


def _run_fixed_point(x, w, estimator, tuning, config, update, objective=None) -> FitResult:
    xi = _initial_point(x, w, config)
    result = FitResult(xi, estimator, tuning, converged=False, status="max_iter")
    if objective is not None:
        result.objective_trace.append(objective(xi))

    for it in range(1, config.max_iter + 1):
        try:
            xi_new = update(xi)
        except DomainError as e:
            logger.warning("%s iteration %d left the domain of A_p^{-1}: %s", estimator, it, e)
            result.status = "diverged"
            result.iterations = it
            return result
        step = float(np.linalg.norm(xi_new - xi))
        xi = xi_new
        result.xi_hat = xi
        result.iterations = it
        result.step_trace.append(step)
        if objective is not None:
            result.objective_trace.append(objective(xi))
        logger.debug("%s(%.4g) iteration %d: |dxi| = %.3e", estimator, tuning, it, step)
        if step <= config.tol:
            result.converged = True
            result.status = "converged"
            return result

    logger.warning("%s(%.4g) did not converge in %d iterations", estimator, tuning, config.max_iter)
    return result


def fit_type1(data, beta: float, config: Optional[EstimatorConfig] = None, weights=None) -> FitResult:
    """
    Minimum beta-divergence (type 1) estimate by fixed-point iteration

    xi <- A^{-1}(|S - n D u| / W) S/|S| with S = sum w_j x_j, W = sum w_j,
    w_j = exp(beta xi'x_j) and u the current direction.

    Args:
        data: (n, p) unit vectors
        beta: Tuning value >= 0 (0 gives the MLE)
        config: Stopping rule and init
        weights: Optional observation weights

    Returns:
        FitResult (check converged or call raise_for_status())
    """
    if beta < 0:
        raise DomainError(f"beta must be nonnegative, got {beta}")
    config = config or EstimatorConfig()
    x, obs = _prepare(data, weights)
    p = x.shape[1]
    _check_not_degenerate(x, obs)
    total = obs.sum()

    def update(xi):
        kappa = concentration(xi)
        w = obs * _scaled_weights(x, xi, beta)
        s = w @ x
        s_norm = np.linalg.norm(s)
        if s_norm <= DEGENERATE_RESULTANT * w.sum():
            return np.zeros(p)
        shifted = s.copy()
        if kappa > 0:
            shifted -= total * type1_correction_scaled(p, kappa, beta) * xi / kappa
        return a_ratio_inv(p, np.linalg.norm(shifted) / w.sum()) * s / s_norm

    return _run_fixed_point(x, obs, "type1", beta, config, update)


def _weighted_gamma_objective(x, obs, gamma, xi) -> float:
    p = x.shape[1]
    kappa = concentration(xi)
    log_mean = special.logsumexp(gamma * (x @ xi), b=obs / obs.sum())
    return float(-log_mean / gamma - log_vmf_norm_const(p, kappa)
                 + log_vmf_power_integral(p, xi, 1.0 + gamma) / (1.0 + gamma))


def empirical_gamma_objective(data, gamma: float, xi, weights=None) -> float:
    """
    xi-dependent part of the gamma-divergence from the empirical distribution

    -(1/gamma) log[(1/n) sum exp(gamma xi'x_j)] - log C(xi) + 1/(1+gamma) log int f^{1+gamma}
    """
    if gamma <= 0:
        raise DomainError(f"gamma must be positive, got {gamma}")
    x, obs = _prepare(data, weights)
    xi = as_natural_param(xi)
    if xi.size != x.shape[1]:
        raise DomainError(f"xi has dimension {xi.size}, data have {x.shape[1]}")
    return _weighted_gamma_objective(x, obs, gamma, xi)


def fit_type0(data, gamma: float, config: Optional[EstimatorConfig] = None, weights=None) -> FitResult:
    """
    Minimum gamma-divergence (type 0) estimate by fixed-point iteration

    xi <- A^{-1}(|S| / W) / (1 + gamma) * S/|S| with w_j = exp(gamma xi'x_j).
    The empirical gamma-objective is recorded after every step and is
    non-increasing along the iteration.
    """
    if gamma < 0:
        raise DomainError(f"gamma must be nonnegative, got {gamma}")
    config = config or EstimatorConfig()
    x, obs = _prepare(data, weights)
    p = x.shape[1]
    _check_not_degenerate(x, obs)

    def update(xi):
        w = obs * _scaled_weights(x, xi, gamma)
        s = w @ x
        s_norm = np.linalg.norm(s)
        if s_norm <= DEGENERATE_RESULTANT * w.sum():
            return np.zeros(p)
        return a_ratio_inv(p, s_norm / w.sum()) / (1.0 + gamma) * s / s_norm

    objective = None
    if gamma > 0:
        objective = lambda xi: _weighted_gamma_objective(x, obs, gamma, xi)
    return _run_fixed_point(x, obs, "type0", gamma, config, update, objective)


def fit(kind: str, data, tuning: float = 0.0, config: Optional[EstimatorConfig] = None,
        weights=None) -> FitResult:
    """Dispatch on estimator kind (mle, type1, type0)"""
    if kind == "mle":
        return fit_mle(data, weights)
    if kind == "type1":
        return fit_type1(data, tuning, config, weights)
    if kind == "type0":
        return fit_type0(data, tuning, config, weights)
    raise DomainError(f"estimator must be one of {ESTIMATORS}, got {kind}")


PSI_KINDS = ("huber", "andrews")


@dataclass(frozen=True)
class LenthConfig:
    psi_kind: str = "huber"
    c: float = 1.5
    max_iter: int = 500
    tol: float = 1.0e-10

    def __post_init__(self):
        if self.psi_kind not in PSI_KINDS:
            raise DomainError(f"psi_kind must be one of {PSI_KINDS}, got {self.psi_kind}")
        if not self.c > 0:
            raise DomainError("c must be positive")
        if self.max_iter < 1 or not self.tol > 0:
            raise DomainError("max_iter must be >= 1 and tol positive")


@dataclass
class LenthResult:
    mu_hat: float
    kappa_hat: float
    iterations: int
    converged: bool
    weights: np.ndarray

    @property
    def xi_hat(self) -> np.ndarray:
        return self.kappa_hat * np.array([np.cos(self.mu_hat), np.sin(self.mu_hat)])

    def raise_for_status(self) -> "LenthResult":
        if not self.converged:
            raise NonConvergenceError(f"Lenth fit stopped after {self.iterations} iterations", result=self)
        return self

    def to_dict(self) -> Dict:
        return {
            'mu_hat': self.mu_hat,
            'kappa_hat': self.kappa_hat,
            'xi_hat': self.xi_hat.tolist(),
            'iterations': self.iterations,
            'converged': self.converged,
            'weights': self.weights.tolist(),
        }


def lenth_residual(phi, kappa: float) -> np.ndarray:
    """
    Standardised arc residual t = +/- sqrt(2 kappa (1 - cos phi)),
    positive when phi mod 2 pi lies in [0, pi)
    """
    phi = np.asarray(phi, dtype=float)
    sign = np.where(np.mod(phi, 2 * np.pi) < np.pi, 1.0, -1.0)
    return sign * np.sqrt(2.0 * kappa * np.clip(1.0 - np.cos(phi), 0.0, None))


def lenth_weight(phi, kappa: float, c: float, psi_kind: str = "huber") -> np.ndarray:
    """Weight psi(t)/t of the residual at angle phi from the centre; 1 at t = 0"""
    t = lenth_residual(phi, kappa)
    abs_t = np.abs(t)
    safe = np.where(abs_t > 0, abs_t, 1.0)
    if psi_kind == "huber":
        w = np.minimum(1.0, c / safe)
    elif psi_kind == "andrews":
        w = np.where(abs_t <= c * np.pi, c * np.sin(safe / c) / safe, 0.0)
    else:
        raise DomainError(f"psi_kind must be one of {PSI_KINDS}, got {psi_kind}")
    return np.where(abs_t > 0, w, 1.0)


def _wrap(angle: float) -> float:
    return float(np.angle(np.exp(1j * angle)))


def fit_lenth(angles, config: Optional[LenthConfig] = None) -> LenthResult:
    """
    Lenth's M-estimator for circular data

    Alternates the weighted circular mean for mu with kappa = A_2^{-1}(R_w),
    starting from the MLE.

    Args:
        angles: Observations in radians (n >= 2)
        config: psi function, constant c and stopping rule

    Returns:
        LenthResult
    """
    config = config or LenthConfig()
    theta = np.asarray(angles, dtype=float).ravel()
    if theta.size < 2:
        raise DomainError("Lenth's estimator needs at least two angles")
    points = np.column_stack([np.cos(theta), np.sin(theta)])

    start = fit_mle(points)
    mu = start.mu_hat if start.kappa_hat > 0 else 0.0
    kappa = start.kappa_hat

    for it in range(1, config.max_iter + 1):
        w = lenth_weight(theta - mu, kappa, config.c, config.psi_kind)
        if not w.sum() > 0:
            raise DegenerateDataError("all Lenth weights vanish")
        resultant = w @ points
        r_bar = np.linalg.norm(resultant) / w.sum()
        if r_bar >= 1.0 - DEGENERATE_RESULTANT:
            raise DegenerateDataError("weighted mean resultant length reached 1")
        mu_new = float(np.arctan2(resultant[1], resultant[0]))
        kappa_new = a_ratio_inv(2, r_bar)
        change = abs(_wrap(mu_new - mu)) + abs(kappa_new - kappa)
        mu, kappa = mu_new, kappa_new
        if change <= config.tol:
            return LenthResult(mu, kappa, it, True, w)

    logger.warning("Lenth fit did not converge in %d iterations", config.max_iter)
    return LenthResult(mu, kappa, config.max_iter, False, w)


def weighted_cosine_ratio(kappa: float, c: float, psi_kind: str = "huber") -> float:
    """
    Population weighted mean resultant length under vM_2(0, kappa)

    Ratio of the integrals of w(phi) cos(phi) f(phi) and w(phi) f(phi), where w
    is the Lenth weight evaluated at the true parameters.
    """
    log_c = log_vmf_norm_const(2, kappa)

    def integrand(phi):
        f = np.exp(log_c + kappa * np.cos(phi))
        w = float(lenth_weight(phi, kappa, c, psi_kind))
        return np.array([w * np.cos(phi) * f, w * f])

    numerator, denominator = integrate_circle(integrand)
    return float(numerator / denominator)
