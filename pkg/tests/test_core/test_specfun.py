"""Tests for special functions against mpmath."""
import mpmath
import numpy as np
import pytest

from pdm_spectra.core.errors import DomainError, UnsupportedError
from pdm_spectra.core.specfun import (
    bessel_j,
    bessel_j_series,
    bessel_k_imag,
    hyp2f1,
    hyp2f1_terminating,
    kummer_terminating,
    laguerre,
    ode_residual,
)


@pytest.mark.parametrize("a,b,c,x", [(-3, 2.5, 1.5, 0.3), (-5, -0.5, 3.25, -0.8), (0, 1.0, 2.0, 0.4)])
def test_hyp2f1_terminating(a: int, b: float, c: float, x: float) -> None:
    """Test the finite Gauss sum."""
    assert hyp2f1_terminating(a, b, c, x) == pytest.approx(float(mpmath.hyp2f1(a, b, c, x)), rel=1e-13)


def test_hyp2f1_terminating_array() -> None:
    """Test array arguments keep their shape."""
    x = np.array([0.1, 0.2, 0.3])

    out = hyp2f1_terminating(-2, 1.0, 1.5, x)

    assert out.shape == (3,)
    assert out[2] == pytest.approx(float(mpmath.hyp2f1(-2, 1.0, 1.5, 0.3)))


def test_hyp2f1_terminating_rejects_non_integer() -> None:
    """Test that a non-terminating series is unsupported."""
    with pytest.raises(UnsupportedError):
        hyp2f1_terminating(0.5, 1.0, 1.0, 0.2)


def test_hyp2f1_terminating_pole() -> None:
    """Test a denominator pole inside the sum."""
    with pytest.raises(DomainError, match="pole"):
        hyp2f1_terminating(-3, 1.0, -1.0, 0.5)


def test_kummer_terminating() -> None:
    """Test the finite confluent sum."""
    assert kummer_terminating(-4, 1.5, 2.0) == pytest.approx(float(mpmath.hyp1f1(-4, 1.5, 2.0)), rel=1e-13)


@pytest.mark.parametrize("n,beta,x", [(0, 0.5, 1.0), (1, 0.5, 1.7), (5, 0.5, 1.7), (8, 2.25, 3.0)])
def test_laguerre(n: int, beta: float, x: float) -> None:
    """Test the recurrence against mpmath."""
    assert laguerre(n, beta, x) == pytest.approx(float(mpmath.laguerre(n, beta, x)), rel=1e-10, abs=1e-13)


def test_laguerre_negative_degree() -> None:
    """Test rejecting n < 0."""
    with pytest.raises(DomainError):
        laguerre(-1, 0.0, 1.0)


@pytest.mark.parametrize("alpha,x", [(2.5, 3.0), (0.0, 1.2), (-3.0, 2.0), (1.7, 0.4)])
def test_bessel_j_and_series(alpha: float, x: float) -> None:
    """Test scipy and the ascending series agree with mpmath."""
    expected = float(mpmath.besselj(alpha, x))

    assert bessel_j(alpha, x) == pytest.approx(expected, rel=1e-12)
    assert bessel_j_series(alpha, x) == pytest.approx(expected, rel=1e-12)


def test_bessel_j_negative_argument() -> None:
    """Test that x < 0 raises DomainError."""
    with pytest.raises(DomainError):
        bessel_j(1.0, -0.5)


@pytest.mark.parametrize("nu,x", [(1.3, 0.8), (0.5, 2.0), (3.0, 0.3)])
def test_bessel_k_imag(nu: float, x: float) -> None:
    """Test K_{iν} against mpmath."""
    expected = float(mpmath.re(mpmath.besselk(1j * nu, x)))

    assert bessel_k_imag(nu, x) == pytest.approx(expected, rel=1e-10, abs=1e-14)


def test_bessel_k_imag_underflow() -> None:
    """Test the underflow cut and the domain check."""
    assert bessel_k_imag(1.0, 800.0) == 0.0
    with pytest.raises(DomainError):
        bessel_k_imag(1.0, 0.0)


def test_hyp2f1_unit_disc() -> None:
    """Test the Gauss function inside and outside the unit disc."""
    assert hyp2f1(0.5, 1.5, 2.5, 0.4) == pytest.approx(float(mpmath.hyp2f1(0.5, 1.5, 2.5, 0.4)), rel=1e-12)
    with pytest.raises(DomainError):
        hyp2f1(0.5, 1.5, 2.5, 1.0)


def test_ode_residual_of_sine() -> None:
    """Test u = sin x against u″ + u = 0."""
    x = np.linspace(0.5, 1.5, 5)

    residual = ode_residual(np.sin, (np.ones_like, np.zeros_like, np.ones_like), x)

    assert residual.shape == (5,)
    assert np.all(residual < 1e-8)


def test_ode_residual_detects_wrong_equation() -> None:
    """Test u = sin x against u″ − u = 0."""
    x = np.linspace(0.5, 1.5, 5)

    residual = ode_residual(np.sin, (np.ones_like, np.zeros_like, lambda t: -np.ones_like(t)), x)

    assert np.all(residual > 0.5)
