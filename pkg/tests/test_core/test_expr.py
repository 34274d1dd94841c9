"""Tests for coefficient expressions."""
import math

import numpy as np
import pytest

from pdm_spectra.core.errors import DomainError
from pdm_spectra.core.expr import CoefficientExpr, one_dimensional


def test_parse_and_evaluate_radial() -> None:
    """Test evaluating an expression written with r."""
    f = CoefficientExpr.parse("(r**2 + 1)**2")

    assert float(f.evaluate(1.0, 0.0, 0.0, 0.0)) == pytest.approx(4.0)
    assert float(f.evaluate(1.0, 1.0, 1.0, 0.0)) == pytest.approx(16.0)


def test_evaluate_broadcasts() -> None:
    """Test evaluation on broadcastable coordinate arrays."""
    f = CoefficientExpr.parse("x1 + x2")
    x1 = np.array([[0.0], [1.0]])
    x2 = np.array([[0.0, 2.0, 4.0]])

    values = f.evaluate(x1, x2, 0.0, 0.0)

    assert values.shape == (2, 3)
    assert values[1, 2] == pytest.approx(5.0)


def test_unset_parameter_is_nan() -> None:
    """Test that a missing parameter never evaluates silently."""
    v = CoefficientExpr.parse("nu*x1")

    assert math.isnan(float(v.evaluate(1.0, 0.0, 0.0, 0.0)))
    assert float(v.evaluate(1.0, 0.0, 0.0, 0.0, params={"nu": 3.0})) == pytest.approx(3.0)


def test_with_params_and_free_parameters() -> None:
    """Test numeric substitution of parameters."""
    v = CoefficientExpr.parse("kappa*r + omega")

    assert v.free_parameters == ("kappa", "omega")
    fixed = v.with_params({"kappa": 2.0, "omega": 1.0})
    assert fixed.free_parameters == ()
    assert float(fixed.evaluate(3.0, 0.0, 0.0, 0.0)) == pytest.approx(7.0)


def test_subs_variables_and_parameters() -> None:
    """Test substituting a variable and a parameter by name."""
    v = CoefficientExpr.parse("nu*x1 + x2")

    out = v.subs({"nu": 2.0, "x2": 1.0})

    assert out.variables == v.variables
    assert float(out.evaluate(3.0, 100.0, 0.0, 0.0)) == pytest.approx(7.0)
    with pytest.raises(DomainError):
        v.subs({"q": 1.0})


def test_unknown_symbol_rejected() -> None:
    """Test that unknown names raise DomainError."""
    with pytest.raises(DomainError, match="Unknown symbols"):
        CoefficientExpr.parse("foo*x1")


def test_diff_one_dimensional() -> None:
    """Test analytic derivatives."""
    p = one_dimensional("r**3", "r")

    assert float(p.diff("r").evaluate(2.0)) == pytest.approx(12.0)
    assert float(p.diff("r", 2).evaluate(2.0)) == pytest.approx(12.0)
    with pytest.raises(DomainError):
        p.diff("z")


def test_depends_on_time() -> None:
    """Test detection of time dependence."""
    assert CoefficientExpr.parse("sin(t)*x1").depends_on("t")
    assert not CoefficientExpr.parse("x1**2").depends_on("t")


def test_compose_change_of_variable() -> None:
    """Test substituting an inner expression for the variable."""
    outer = one_dimensional("r**2", "r")
    inner = one_dimensional("exp(y)", "y")

    composed = outer.compose("r", inner)

    assert composed.variables == ("y",)
    assert float(composed.evaluate(0.5)) == pytest.approx(math.e)


def test_restrict_radial() -> None:
    """Test the one-variable radial form of a space-time expression."""
    v = CoefficientExpr.parse("r**2 + x3")

    radial = v.restrict_radial()

    assert radial.variables == ("r",)
    assert float(radial.evaluate(3.0)) == pytest.approx(9.0)


def test_restrict_radial_rejects_time() -> None:
    """Test that time-dependent expressions have no radial form."""
    with pytest.raises(DomainError):
        CoefficientExpr.parse("r*t").restrict_radial()


def test_arithmetic_variable_mismatch() -> None:
    """Test that expressions over different variables do not combine."""
    with pytest.raises(DomainError, match="mismatch"):
        one_dimensional("r", "r") + one_dimensional("z", "z")


def test_evaluate_real_rejects_non_finite() -> None:
    """Test that NaN values raise DomainError."""
    v = CoefficientExpr.parse("log(x1)")

    assert float(v.evaluate_real(1.0, 0.0, 0.0, 0.0)) == pytest.approx(0.0)
    with pytest.raises(DomainError, match="not finite"):
        v.evaluate_real(-1.0, 0.0, 0.0, 0.0)


def test_evaluate_real_rejects_complex() -> None:
    """Test that complex coefficients raise DomainError."""
    v = CoefficientExpr.parse("I*x1")

    with pytest.raises(DomainError, match="not real"):
        v.evaluate_real(1.0, 0.0, 0.0, 0.0)


def test_coordinate_count_checked() -> None:
    """Test the number of coordinates passed to evaluate."""
    with pytest.raises(DomainError):
        CoefficientExpr.parse("x1").evaluate(1.0)
