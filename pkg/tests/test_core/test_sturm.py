"""Tests for the Sturm–Liouville eigen-solver."""
import math

import numpy as np
import pytest

from pdm_spectra.core.errors import ContractError
from pdm_spectra.core.separation import Endpoint, SLProblem, make_problem
from pdm_spectra.core.sturm import (
    discretize,
    eigen_lowest,
    operator_residual,
    rayleigh,
    refine,
    solve,
    sturm_count,
)


@pytest.fixture
def sample_box() -> SLProblem:
    """Sample particle in a box, −u″ = λu on (0, π) with λ = k²."""
    return make_problem("box", "x", "1", "0", "1", (0.0, math.pi))


@pytest.fixture
def sample_oscillator() -> SLProblem:
    """Sample harmonic oscillator −u″ + y²u = λu with λ = 2k + 1."""
    return make_problem(
        "oscillator", "y", "1", "y**2", "1", (-math.inf, math.inf),
        left=Endpoint.SINGULAR, right=Endpoint.SINGULAR, center=0.0, window=8.0,
    )


def test_discretize_contract(sample_box: SLProblem, sample_oscillator: SLProblem) -> None:
    """Test the node minimum and the finite-interval requirement."""
    with pytest.raises(ContractError):
        discretize(sample_box, 32)
    with pytest.raises(ContractError, match="truncate"):
        discretize(sample_oscillator, 128)


def test_discretize_node_layout(sample_box: SLProblem) -> None:
    """Test interior vertex nodes and faces halfway between them."""
    d = discretize(sample_box, 63)

    h = math.pi / 64
    assert d.h == pytest.approx(h)
    assert d.nodes[0] == pytest.approx(h) and d.nodes[-1] == pytest.approx(math.pi - h)
    assert len(d.off) == 62


def test_discretize_skips_vanishing_endpoint() -> None:
    """Test that a p vanishing at an endpoint is only sampled at faces inside."""
    problem = make_problem("edge", "x", "x", "0", "1", (0.0, 1.0))

    d = discretize(problem, 63)

    assert d.diag[0] == pytest.approx((1 / 128 + 3 / 128) * 64**2)
    assert np.all(d.diag > 0)


def test_eigen_lowest_box(sample_box: SLProblem) -> None:
    """Test the three-point eigenvalues of the box."""
    d = discretize(sample_box, 255)

    result = eigen_lowest(d, 3)

    h = math.pi / 256
    exact = [4 / h**2 * math.sin(k * h / 2) ** 2 for k in (1, 2, 3)]
    assert result.eigenvalues == pytest.approx(exact, rel=1e-10)
    assert result.vectors.shape == (255, 3)
    assert max(result.residuals) < 1e-8


def test_eigen_lowest_rejects_too_many_levels(sample_box: SLProblem) -> None:
    """Test the k ≤ n/4 contract."""
    with pytest.raises(ContractError):
        eigen_lowest(discretize(sample_box, 64), 17)


def test_sturm_count(sample_box: SLProblem) -> None:
    """Test counting eigenvalues below a shift."""
    d = discretize(sample_box, 255)

    assert sturm_count(d, 0.5) == 0
    assert sturm_count(d, 5.0) == 2
    assert sturm_count(d, 10.0) == 3


def test_rayleigh_of_ground_state(sample_box: SLProblem) -> None:
    """Test the Rayleigh quotient of sin x."""
    d = discretize(sample_box, 255)

    result = rayleigh(d, np.sin(d.nodes))

    assert result.value == pytest.approx(1.0, rel=1e-4)
    assert result.eigen_like
    assert operator_residual(d, np.sin(d.nodes), result.value) < 1e-6


def test_rayleigh_shape_check(sample_box: SLProblem) -> None:
    """Test rejecting samples of the wrong length."""
    d = discretize(sample_box, 64)

    with pytest.raises(ContractError):
        rayleigh(d, np.ones(10))


def test_refine_box(sample_box: SLProblem) -> None:
    """Test Richardson extrapolation to k²."""
    result = refine(sample_box, 3, target_tol=1e-8, n0=255)

    assert result.extrapolated
    assert result.eigenvalues == pytest.approx([1.0, 4.0, 9.0], rel=1e-7)
    assert all(e < 1e-6 for e in result.errors)


def test_refine_tolerance_floor(sample_box: SLProblem) -> None:
    """Test that tolerances below the floor are refused."""
    with pytest.raises(ContractError):
        refine(sample_box, 1, target_tol=1e-12)


def test_refine_periodic_ring() -> None:
    """Test −u″ = λu on a circle: λ = 0, 1, 1."""
    ring = make_problem(
        "ring", "phi", "1", "0", "1", (0.0, 2 * math.pi), left=Endpoint.PERIODIC, right=Endpoint.PERIODIC
    )

    result = refine(ring, 3, target_tol=1e-8, n0=256)

    assert result.eigenvalues == pytest.approx([0.0, 1.0, 1.0], abs=1e-7)


def test_solve_oscillator_on_line(sample_oscillator: SLProblem) -> None:
    """Test adaptive truncation on the whole line."""
    result = solve(sample_oscillator, 3, tol=1e-8, n0=255, labels={"l": 0})

    assert not result.continuum
    assert result.labels == {"l": 0}
    assert result.eigenvalues == pytest.approx([1.0, 3.0, 5.0], rel=1e-6)
    assert result.window[0] < -3 and result.window[1] > 3


def test_solve_zero_levels(sample_box: SLProblem) -> None:
    """Test that k = 0 gives an empty result."""
    result = solve(sample_box, 0, n0=255)

    assert result.count == 0
