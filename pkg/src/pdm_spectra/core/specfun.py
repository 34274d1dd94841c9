"""Special functions used by the closed-form eigenfunctions.

Terminating hypergeometric series and Laguerre polynomials are summed directly;
Bessel functions of the first kind and the Gauss function come from scipy, with
an independent ascending series for cross-checks. The modified Bessel function
of imaginary order is computed from its cosine integral.
"""
import logging
import math
from typing import Callable, Sequence, Union

import numpy as np
from scipy import special

from .errors import DomainError, UnsupportedError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

UNDERFLOW_ARGUMENT = 700.0
SERIES_MAX_TERMS = 300


def _nonpositive_integer(a: float, what: str) -> int:
    if a > 0 or not math.isclose(a, round(a), abs_tol=1e-12):
        raise UnsupportedError(f"{what} needs a non-positive integer first parameter, got {a}")
    return int(round(a))


def hyp2f1_terminating(a: float, b: float, c: float, x: ArrayLike) -> ArrayLike:
    """₂F₁(a, b; c; x) for a ∈ {0, −1, −2, ...} as a finite sum.

    Args:
        a: Non-positive integer
        b: Second numerator parameter
        c: Denominator parameter; must not hit a pole before the series ends
        x: Argument, scalar or array

    Returns:
        Sum of |a| + 1 terms
    """
    m = _nonpositive_integer(a, "hyp2f1_terminating")
    for j in range(-m):
        if c + j == 0:
            raise DomainError(f"hyp2f1_terminating: c={c} is a pole within the series")
    return _finite_series(lambda j: (a + j) * (b + j) / ((c + j) * (j + 1)), -m, x)


def kummer_terminating(a: float, b: float, x: ArrayLike) -> ArrayLike:
    """₁F₁(a; b; x) for a ∈ {0, −1, −2, ...} as a finite sum."""
    m = _nonpositive_integer(a, "kummer_terminating")
    for j in range(-m):
        if b + j == 0:
            raise DomainError(f"kummer_terminating: b={b} is a pole within the series")
    return _finite_series(lambda j: (a + j) / ((b + j) * (j + 1)), -m, x)


def _finite_series(ratio: Callable[[int], float], count: int, x: ArrayLike) -> ArrayLike:
    """Σ_{j≤count} t_j x^j with t_{j+1} = ratio(j)·t_j, summed with fsum per point."""
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    coefficients = [1.0]
    for j in range(count):
        coefficients.append(coefficients[-1] * ratio(j))
    out = np.array([math.fsum(c * xi**j for j, c in enumerate(coefficients)) for xi in xs.ravel()])
    out = out.reshape(xs.shape)
    return float(out[0]) if np.ndim(x) == 0 else out


def laguerre(n: int, beta: float, x: ArrayLike) -> ArrayLike:
    """Generalized Laguerre polynomial L_n^(β)(x) by the three-term recurrence."""
    if n < 0:
        raise DomainError(f"laguerre needs n >= 0, got {n}")
    x = np.asarray(x, dtype=float)
    previous = np.ones_like(x)
    if n == 0:
        return previous if x.ndim else float(previous)
    current = 1.0 + beta - x
    for k in range(1, n):
        previous, current = current, ((2 * k + 1 + beta - x) * current - (k + beta) * previous) / (k + 1)
    if not np.all(np.isfinite(current)):
        logger.warning(f"laguerre overflow for n={n}, beta={beta}")
    return current if x.ndim else float(current)


def bessel_j(alpha: float, x: ArrayLike) -> ArrayLike:
    """J_α(x) for x ≥ 0; negative integer orders follow J_{−m} = (−1)^m J_m."""
    xs = np.asarray(x, dtype=float)
    if np.any(xs < 0):
        raise DomainError("bessel_j needs x >= 0")
    out = special.jv(alpha, xs)
    return out if xs.ndim else float(out)


def bessel_j_series(alpha: float, x: float) -> float:
    """Ascending series Σ (−1)^m (x/2)^{2m+α} / (m! Γ(m+α+1)); accurate for moderate x."""
    if x < 0:
        raise DomainError("bessel_j_series needs x >= 0")
    if x == 0:
        return 1.0 if alpha == 0 else (0.0 if alpha > 0 or float(alpha).is_integer() else math.inf)
    half = x / 2
    terms = []
    for m in range(SERIES_MAX_TERMS):
        term = (-1) ** m * half ** (2 * m) * special.rgamma(m + 1) * special.rgamma(m + alpha + 1)
        terms.append(term)
        if m > abs(alpha) + half and abs(term) < 1e-18 * abs(math.fsum(terms)):
            break
    return math.fsum(terms) * half**alpha


def bessel_k_imag(nu: float, x: ArrayLike, rtol: float = 1e-13) -> ArrayLike:
    """K_{iν}(x) = ∫₀^∞ e^{−x cosh t} cos(νt) dt for x > 0.

    The integrand decays double-exponentially, so the trapezoid rule converges
    geometrically; the step is halved until the sum settles. Arguments beyond
    the underflow threshold return exactly 0.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xs <= 0):
        raise DomainError("bessel_k_imag needs x > 0")
    out = np.array([_k_imag_scalar(nu, xi, rtol) for xi in xs.ravel()]).reshape(xs.shape)
    return float(out[0]) if np.ndim(x) == 0 else out


def _k_imag_scalar(nu: float, x: float, rtol: float) -> float:
    if x > UNDERFLOW_ARGUMENT:
        logger.debug(f"K_i{nu:g}({x:g}) is zero by underflow")
        return 0.0
    upper = math.acosh(UNDERFLOW_ARGUMENT / x + 1.0)
    step = 0.25
    previous = None
    for _ in range(12):
        t = np.arange(0.0, upper + step, step)
        f = np.exp(-x * np.cosh(t)) * np.cos(nu * t)
        value = step * (math.fsum(f) - 0.5 * f[0])
        if previous is not None and abs(value - previous) <= rtol * max(abs(value), math.exp(-x)):
            return value
        previous = value
        step /= 2
    logger.warning(f"K_i{nu:g}({x:g}) trapezoid did not settle")
    return value


def hyp2f1(a: float, b: float, c: float, x: ArrayLike) -> ArrayLike:
    """Gauss ₂F₁ inside the unit disc."""
    xs = np.asarray(x, dtype=float)
    if np.any(np.abs(xs) >= 1):
        raise DomainError("hyp2f1 is evaluated for |x| < 1 only")
    out = special.hyp2f1(a, b, c, xs)
    return out if xs.ndim else float(out)


# Central differences of sixth order
_D1 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_D2 = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0


def ode_residual(
    fn: Callable[[np.ndarray], np.ndarray],
    coeffs: Sequence[Callable[[np.ndarray], np.ndarray]],
    x: ArrayLike,
    h: float = 1e-2,
) -> np.ndarray:
    """Relative residual of a(x)u″ + b(x)u′ + c(x)u = 0 at the given points.

    Args:
        fn: Vectorised candidate solution
        coeffs: (a, b, c) as vectorised callables
        x: Points, at least 3h inside the domain of fn
        h: Difference step

    Returns:
        |a u″ + b u′ + c u| / (|a u″| + |b u′| + |c u|) per point
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    offsets = np.arange(-3, 4) * h
    samples = np.stack([np.asarray(fn(xs + o), dtype=float) for o in offsets])
    u = samples[3]
    du = np.tensordot(_D1, samples, axes=1) / h
    d2u = np.tensordot(_D2, samples, axes=1) / h**2
    a, b, c = (np.asarray(f(xs), dtype=float) for f in coeffs)
    terms = (a * d2u, b * du, c * u)
    scale = sum(np.abs(t) for t in terms)
    scale = np.where(scale > 0, scale, 1.0)
    return np.abs(sum(terms)) / scale
