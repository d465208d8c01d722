"""
Special functions for the von Mises-Fisher family
Scaled modified Bessel functions, the ratio A_p and its inverse/derivative,
the vMF normalising constant, and the quadrature rules used as test oracles
"""

import logging
from typing import Callable, Tuple, Union

import numpy as np
from scipy import integrate, special

from utils.errors import DomainError, QuadratureError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Above this argument A_p comes from the continued fraction instead of ive(nu+1)/ive(nu)
CONTINUED_FRACTION_MIN = 50.0
CONTINUED_FRACTION_MAX = 1.0e6
SMALL_ARGUMENT = 1.0e-8
SERIES_ARGUMENT = 1.0e-3

QUAD_EPSABS = 1.0e-10
QUAD_EPSREL = 1.0e-12
QUAD_LIMIT = 2000


def _check_dimension(p: int) -> int:
    if int(p) != p or p < 2:
        raise DomainError(f"dimension p must be an integer >= 2, got {p}")
    return int(p)


def _as_nonnegative(x: ArrayLike, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError(f"{name} must be finite and nonnegative")
    return arr


def _unwrap(value: np.ndarray, like: ArrayLike):
    return float(value) if np.ndim(like) == 0 else value


def bessel_i_scaled(nu: float, x: ArrayLike) -> ArrayLike:
    """
    Exponentially scaled modified Bessel function of the first kind

    Args:
        nu: Order, nu >= -1/2
        x: Nonnegative argument (scalar or array)

    Returns:
        exp(-x) * I_nu(x)
    """
    if nu < -0.5:
        raise DomainError(f"order nu must be >= -1/2, got {nu}")
    arr = _as_nonnegative(x)
    return _unwrap(special.ive(nu, arr), x)


def log_bessel_i_scaled(nu: float, x: ArrayLike) -> ArrayLike:
    """log(exp(-x) I_nu(x)); -inf at x=0 for nu > 0"""
    with np.errstate(divide="ignore"):
        return np.log(bessel_i_scaled(nu, x))


def _continued_fraction_ratio(nu: float, x: np.ndarray, tol: float = 1.0e-15,
                              tiny: float = 1.0e-300) -> np.ndarray:
    """
    I_{nu+1}(x)/I_nu(x) by the modified Lentz method, vectorised over x

    The fraction is 1/(2(nu+1)/x + 1/(2(nu+2)/x + ...)); the number of terms
    needed grows like sqrt(x).
    """
    x = np.atleast_1d(x).astype(float)
    max_terms = int(10 * np.sqrt(x.max()) + 100)

    f = np.full_like(x, tiny)
    c = f.copy()
    d = np.zeros_like(x)
    active = np.ones(x.shape, dtype=bool)

    for j in range(1, max_terms + 1):
        b_j = 2.0 * (nu + j) / x
        d_new = b_j + d
        d_new = np.where(d_new == 0, tiny, d_new)
        c_new = b_j + 1.0 / c
        c_new = np.where(c_new == 0, tiny, c_new)
        d_new = 1.0 / d_new
        delta = c_new * d_new

        f = np.where(active, f * delta, f)
        c = np.where(active, c_new, c)
        d = np.where(active, d_new, d)
        active &= np.abs(delta - 1.0) >= tol
        if not active.any():
            break

    if active.any():
        logger.debug("continued fraction hit %d terms for %d arguments", max_terms, active.sum())
    return f


def a_ratio(p: int, x: ArrayLike) -> ArrayLike:
    """
    Bessel ratio A_p(x) = I_{p/2}(x) / I_{(p-2)/2}(x)

    Args:
        p: Ambient dimension, p >= 2
        x: Nonnegative argument (scalar or array)

    Returns:
        Mean resultant length of a vMF variable with concentration x, in [0, 1)
    """
    p = _check_dimension(p)
    arr = np.atleast_1d(_as_nonnegative(x))
    nu = (p - 2) / 2.0
    out = np.empty_like(arr)

    small = arr < SERIES_ARGUMENT
    fraction = (arr > CONTINUED_FRACTION_MIN) & (arr <= CONTINUED_FRACTION_MAX)
    quotient = ~(small | fraction)

    xs = arr[small]
    out[small] = xs / p - xs ** 3 / (p ** 2 * (p + 2)) + 2 * xs ** 5 / (p ** 3 * (p + 2) * (p + 4))
    if fraction.any():
        out[fraction] = _continued_fraction_ratio(nu, arr[fraction])
    if quotient.any():
        xq = arr[quotient]
        out[quotient] = special.ive(nu + 1, xq) / special.ive(nu, xq)

    return _unwrap(out if np.ndim(x) else out[0], x)


def a_ratio_over_x(p: int, x: ArrayLike) -> ArrayLike:
    """A_p(x)/x, equal to 1/p at x=0"""
    p = _check_dimension(p)
    arr = np.atleast_1d(_as_nonnegative(x))
    out = np.empty_like(arr)
    small = arr < SERIES_ARGUMENT
    xs = arr[small]
    out[small] = 1.0 / p - xs ** 2 / (p ** 2 * (p + 2)) + 2 * xs ** 4 / (p ** 3 * (p + 2) * (p + 4))
    out[~small] = np.atleast_1d(a_ratio(p, arr[~small])) / arr[~small]
    return _unwrap(out if np.ndim(x) else out[0], x)


def second_moment_coefficients(p: int, r: float) -> Tuple[float, float]:
    """
    Coefficients of E[xx'] = a I + b zz' for x ~ vMF(z), r = |z|

    Returns:
        (A_p(r)/r, (1 - p A_p(r)/r)/r^2), both finite at r=0
    """
    p = _check_dimension(p)
    if r < 0:
        raise DomainError("r must be nonnegative")
    if r < SERIES_ARGUMENT:
        iso = 1.0 / p - r ** 2 / (p ** 2 * (p + 2))
        aniso = 1.0 / (p * (p + 2)) - 2 * r ** 2 / (p ** 2 * (p + 2) * (p + 4))
        return iso, aniso
    iso = a_ratio(p, r) / r
    return iso, (1.0 - p * iso) / r ** 2


def a_ratio_deriv(p: int, x: ArrayLike) -> ArrayLike:
    """
    Derivative of A_p

    Args:
        p: Ambient dimension
        x: Positive argument

    Returns:
        1 - A_p(x)^2 - (p-1) A_p(x) / x
    """
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0):
        raise DomainError("a_ratio_deriv needs x > 0")
    ratio = a_ratio(p, arr)
    return _unwrap(1.0 - ratio ** 2 - (p - 1) * a_ratio_over_x(p, arr), x)


def _asymptotic_ratio_inv(p: int, tail: float) -> float:
    """Root x of 1 - A_p(x) = c1/x - c2/x^2, the two-term large-argument expansion"""
    c1 = (p - 1) / 2.0
    c2 = (p - 1) * (p - 3) / 8.0
    return float((c1 + np.sqrt(c1 ** 2 - 4.0 * c2 * tail)) / (2.0 * tail))


def a_ratio_inv(p: int, r: float, max_iter: int = 200) -> float:
    """
    Inverse of A_p by bracketed Newton iteration

    Roots beyond the continued-fraction range come from the large-argument
    expansion in 1 - r, which keeps full relative accuracy as r approaches 1.

    Args:
        p: Ambient dimension
        r: Mean resultant length in [0, 1)
        max_iter: Iteration cap

    Returns:
        x >= 0 with A_p(x) = r
    """
    p = _check_dimension(p)
    r = float(r)
    if not np.isfinite(r) or r < 0 or r >= 1:
        raise DomainError(f"a_ratio_inv needs 0 <= r < 1, got {r}")
    if r == 0:
        return 0.0

    tail = 1.0 - r
    if tail * CONTINUED_FRACTION_MAX < 0.5 * (p - 1):
        return _asymptotic_ratio_inv(p, tail)

    guess = r * (p - r ** 2) / (1 - r ** 2)
    lo, hi = 0.0, 2.0 * guess
    while a_ratio(p, hi) < r:
        lo, hi = hi, 2.0 * hi

    x = min(max(guess, lo), hi)
    for _ in range(max_iter):
        f = a_ratio(p, x) - r
        if abs(f) <= 4 * np.finfo(float).eps * r:
            return x
        if f < 0:
            lo = x
        else:
            hi = x
        step = f / a_ratio_deriv(p, x)
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1.0e-13 * max(1.0, x) or hi - lo <= 1.0e-14 * max(1.0, x):
            return x_new
        x = x_new

    logger.warning("a_ratio_inv(p=%d, r=%.17g) stopped after %d iterations", p, r, max_iter)
    return x


def log_sphere_area(p: int) -> float:
    """log of the surface area 2 pi^{p/2} / Gamma(p/2) of the unit sphere in R^p"""
    p = _check_dimension(p)
    return float(np.log(2.0) + 0.5 * p * np.log(np.pi) - special.gammaln(0.5 * p))


def log_sphere_exp_integral(p: int, r: float) -> float:
    """
    log of the integral of exp(z'x) over the unit sphere, r = |z|

    Equals (p/2) log(2 pi) + log I_nu(r) - nu log r with nu = (p-2)/2.
    """
    p = _check_dimension(p)
    r = float(_as_nonnegative(r, "r"))
    if r < SMALL_ARGUMENT:
        return log_sphere_area(p) + np.log1p(r ** 2 / (2.0 * p))
    nu = (p - 2) / 2.0
    return float(0.5 * p * np.log(2 * np.pi) + np.log(special.ive(nu, r)) + r - nu * np.log(r))


def log_vmf_norm_const(p: int, kappa: float) -> float:
    """
    log C_p(kappa), the vMF normalising constant

    Args:
        p: Ambient dimension
        kappa: Concentration >= 0

    Returns:
        log of kappa^{nu} / ((2 pi)^{p/2} I_nu(kappa)); -log(area) at kappa=0
    """
    if kappa < 0:
        raise DomainError(f"kappa must be nonnegative, got {kappa}")
    return -log_sphere_exp_integral(p, kappa)


def quadrature(func: Callable, a: float, b: float, epsabs: float = QUAD_EPSABS,
               epsrel: float = QUAD_EPSREL, limit: int = QUAD_LIMIT):
    """
    Adaptive Gauss-Kronrod quadrature of a scalar or array valued integrand

    Raises:
        QuadratureError: subdivision limit reached or non-finite integrand
    """
    value, error, info = integrate.quad_vec(func, a, b, epsabs=epsabs, epsrel=epsrel,
                                            limit=limit, full_output=True)
    if not info.success:
        tolerance = max(epsabs, epsrel * float(np.max(np.abs(value))))
        if not np.isfinite(error) or error > 10 * tolerance:
            raise QuadratureError(f"quadrature on [{a}, {b}] failed: {info.message}")
        logger.debug("quadrature accepted with estimated error %.3g: %s", error, info.message)
    return value


def integrate_circle(func: Callable, epsabs: float = QUAD_EPSABS):
    """
    Integrate over the unit circle

    Args:
        func: Integrand of the angle theta in [-pi, pi); may return an array
        epsabs: Absolute tolerance

    Returns:
        Integral with respect to arc length
    """
    return quadrature(func, -np.pi, np.pi, epsabs=epsabs)


def circle_point(theta: float) -> np.ndarray:
    return np.array([np.cos(theta), np.sin(theta)])


def sphere3_point(theta: float, phi: float) -> np.ndarray:
    """Point with colatitude theta from the first axis and longitude phi"""
    s = np.sin(theta)
    return np.array([np.cos(theta), s * np.cos(phi), s * np.sin(phi)])


def integrate_sphere3(func: Callable, epsabs: float = QUAD_EPSABS):
    """
    Integrate over the unit sphere in R^3 by a colatitude/longitude product rule

    The pole is the first coordinate axis, so integrands concentrated around
    +/- e_1 are resolved by the outer (colatitude) refinement.

    Args:
        func: Integrand of a point x in R^3; may return an array
        epsabs: Absolute tolerance of the outer integral

    Returns:
        Integral with respect to surface area
    """
    def ring(theta):
        inner = quadrature(lambda phi: func(sphere3_point(theta, phi)), 0.0, 2 * np.pi,
                           epsabs=0.1 * epsabs)
        return inner * np.sin(theta)

    return quadrature(ring, 0.0, np.pi, epsabs=epsabs)


def integrate_sphere3_axial(func: Callable, epsabs: float = QUAD_EPSABS):
    """
    Integrate a rotationally symmetric integrand over the unit sphere in R^3

    Args:
        func: Integrand of t = e_1'x in [-1, 1]
        epsabs: Absolute tolerance

    Returns:
        2 pi times the integral of func over [-1, 1]
    """
    return 2 * np.pi * quadrature(func, -1.0, 1.0, epsabs=epsabs / (2 * np.pi))


def integrate_sphere(p: int, func: Callable, epsabs: float = QUAD_EPSABS):
    """Dispatch to the circle (p=2) or sphere (p=3) rule; func takes a point x"""
    if p == 2:
        return integrate_circle(lambda theta: func(circle_point(theta)), epsabs=epsabs)
    if p == 3:
        return integrate_sphere3(func, epsabs=epsabs)
    raise DomainError(f"quadrature is available for p in (2, 3), got {p}")
