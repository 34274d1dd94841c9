"""Tests for grid operators."""
import numpy as np
import pytest

from pdm_spectra.config.schemas import ParameterSet, QuantumNumbers
from pdm_spectra.core.catalog import SystemSpec, basis_operator, validate_params
from pdm_spectra.core.errors import ContractError, DomainError
from pdm_spectra.core.expr import CoefficientExpr
from pdm_spectra.core.hamiltonian import (
    GeneratorOperator,
    Grid3,
    HamiltonianOperator,
    apply_generator,
    apply_hamiltonian,
    check_interior_support,
    effective_potential,
    inner_product,
    norm,
)
from pdm_spectra.core.separation import solver_forms
from pdm_spectra.core.sturm import solve


def test_grid_geometry(sample_grid: Grid3) -> None:
    """Test spacing, nodes and faces of a cell-centred grid."""
    h = 1.0 / 32

    assert sample_grid.spacing == pytest.approx((h, h, h))
    assert sample_grid.axis(0)[0] == pytest.approx(h / 2)
    assert sample_grid.faces(1)[-1] == pytest.approx(1.0)
    assert len(sample_grid.faces(2)) == 33
    assert sample_grid.cell_volume == pytest.approx(h**3)


def test_grid_contract() -> None:
    """Test rejecting small or degenerate grids."""
    with pytest.raises(ContractError):
        Grid3.from_box(((0, 1), (0, 1), (0, 1)), 8)
    with pytest.raises(ContractError):
        Grid3.from_box(((0, 1), (1, 1), (0, 1)), 16)


def test_norm_of_unit_field(sample_grid: Grid3) -> None:
    """Test the discrete L² norm on the unit cube."""
    ones = np.ones(sample_grid.shape, dtype=complex)

    assert norm(sample_grid, ones) == pytest.approx(1.0)
    assert inner_product(sample_grid, ones, 2 * ones) == pytest.approx(2.0)


def test_interior_support_check(sample_grid: Grid3) -> None:
    """Test the vanishing-boundary contract."""
    ones = np.ones(sample_grid.shape, dtype=complex)
    bump = np.zeros(sample_grid.shape, dtype=complex)
    bump[sample_grid.interior()] = 1.0

    with pytest.raises(ContractError):
        check_interior_support(ones)
    check_interior_support(bump)


def test_flat_hamiltonian_on_sine(sample_grid: Grid3) -> None:
    """Test −½Δ on a product of sines against the exact stencil symbol."""
    h = sample_grid.spacing[0]
    x1, x2, x3 = sample_grid.mesh()
    psi = (np.sin(np.pi * x1) * np.sin(np.pi * x2) * np.sin(np.pi * x3)).astype(complex)
    op = HamiltonianOperator(CoefficientExpr.constant(1), CoefficientExpr.constant(0), sample_grid)

    out = op(psi)

    symbol = 1.5 * (2 - 2 * np.cos(np.pi * h)) / h**2
    inner = sample_grid.interior()
    assert np.allclose(out[inner], symbol * psi[inner], rtol=1e-10, atol=1e-10)
    assert symbol == pytest.approx(1.5 * np.pi**2, rel=2e-3)


def test_hamiltonian_rejects_non_positive_mass(sample_grid: Grid3) -> None:
    """Test that f ≤ 0 on the grid raises DomainError."""
    f = CoefficientExpr.parse("x1 - 0.5")

    with pytest.raises(DomainError, match="not positive"):
        HamiltonianOperator(f, CoefficientExpr.constant(0), sample_grid)


def test_apply_hamiltonian_requires_support(sample_system_one: SystemSpec) -> None:
    """Test that apply_hamiltonian checks the field support."""
    grid = Grid3.from_box(sample_system_one.box, 16)

    with pytest.raises(ContractError):
        apply_hamiltonian(sample_system_one, {}, grid, np.ones(grid.shape, dtype=complex))


def test_momentum_on_linear_field(sample_grid: Grid3) -> None:
    """Test P1 = −i∂₁ on ψ = x₁ away from the faces."""
    x1, x2, x3 = sample_grid.mesh()
    psi = np.broadcast_to(x1 + 0 * x2 + 0 * x3, sample_grid.shape).astype(complex)

    out = GeneratorOperator(basis_operator("P1"), sample_grid)(psi)

    assert np.allclose(out[sample_grid.interior()], -1j)


def test_rotation_on_quadratic_field(sample_grid: Grid3) -> None:
    """Test M12 = x₁p₂ − x₂p₁ on ψ = x₁x₂."""
    x1, x2, x3 = sample_grid.mesh()
    psi = np.broadcast_to(x1 * x2 + 0 * x3, sample_grid.shape).astype(complex)

    out = GeneratorOperator(basis_operator("M12"), sample_grid)(psi)

    expected = np.broadcast_to(-1j * (x1**2 - x2**2) + 0 * x3, sample_grid.shape)
    inner = sample_grid.interior()
    assert np.allclose(out[inner], expected[inner])


def test_time_derivative_term_needs_field(sample_grid: Grid3) -> None:
    """Test that a ∂t term without ∂tψ raises ContractError."""
    psi = np.zeros(sample_grid.shape, dtype=complex)
    op = GeneratorOperator(basis_operator("Pt"), sample_grid)

    with pytest.raises(ContractError):
        op(psi)
    assert np.allclose(op(psi, dpsi_dt=np.ones(sample_grid.shape, dtype=complex)), 1j)


def test_apply_generator_shape_check(sample_grid: Grid3) -> None:
    """Test that mismatched fields are rejected."""
    with pytest.raises(ContractError):
        apply_generator(basis_operator("P1"), sample_grid, np.zeros((4, 4, 4), dtype=complex))


def test_effective_potential_ordering() -> None:
    """Test the ordering correction ¼(α+γ)Δf + αγ|∇f|²/(2f)."""
    f = CoefficientExpr.parse("x1**2")
    v_hat = CoefficientExpr.constant(0)

    plain = effective_potential(v_hat, f, 0.0, 0.0)
    shifted = effective_potential(v_hat, f, -0.5, 0.0)
    symmetric = effective_potential(v_hat, f, -0.5, -0.5)

    assert float(plain.evaluate(1.0, 0.0, 0.0, 0.0)) == pytest.approx(0.0)
    assert float(shifted.evaluate(1.0, 0.0, 0.0, 0.0)) == pytest.approx(-0.25)
    assert float(symmetric.evaluate(2.0, 0.0, 0.0, 0.0)) == pytest.approx(0.0)


def test_effective_potential_guard() -> None:
    """Test evaluating where f vanishes."""
    v = effective_potential(CoefficientExpr.constant(0), CoefficientExpr.parse("x1**2"), -0.5, 0.0)

    with pytest.raises(DomainError, match="guard"):
        v.evaluate(0.0, 0.0, 0.0, 0.0)


def test_faces_outside_the_box(sample_grid: Grid3) -> None:
    """Test the extra faces used by the fourth-order stencil."""
    h = 1.0 / 32
    faces = sample_grid.faces(0, extra=1)

    assert len(faces) == 35
    assert faces[0] == pytest.approx(-h)
    assert faces[-1] == pytest.approx(1.0 + h)


def test_fourth_order_hamiltonian_on_sine(sample_grid: Grid3) -> None:
    """Test the staggered four-point stencil against its symbol."""
    h = sample_grid.spacing[0]
    x1, x2, x3 = sample_grid.mesh()
    psi = (np.sin(np.pi * x1) * np.sin(np.pi * x2) * np.sin(np.pi * x3)).astype(complex)
    op = HamiltonianOperator(CoefficientExpr.constant(1), CoefficientExpr.constant(0), sample_grid, order=4)

    out = op(psi)

    d = (54 * np.sin(np.pi * h / 2) - 2 * np.sin(3 * np.pi * h / 2)) / (24 * h)
    symbol = 1.5 * d**2
    inner = sample_grid.interior()
    assert np.allclose(out[inner], symbol * psi[inner], rtol=1e-10, atol=1e-10)
    assert symbol == pytest.approx(1.5 * np.pi**2, rel=1e-5)


@pytest.mark.parametrize("order", [2, 4])
def test_hamiltonian_is_symmetric(order: int, sample_system_one: SystemSpec) -> None:
    """Test ⟨u, Hv⟩ = ⟨Hu, v⟩ for interior-supported fields."""
    grid = Grid3.from_box(sample_system_one.box, 24)
    rng = np.random.default_rng(5)
    u = np.zeros(grid.shape, dtype=complex)
    v = np.zeros(grid.shape, dtype=complex)
    inner = grid.interior(2)
    u[inner] = rng.normal(size=u[inner].shape) + 1j * rng.normal(size=u[inner].shape)
    v[inner] = rng.normal(size=v[inner].shape) + 1j * rng.normal(size=v[inner].shape)

    hu = apply_hamiltonian(sample_system_one, {}, grid, u, order=order)
    hv = apply_hamiltonian(sample_system_one, {}, grid, v, order=order)

    scale = norm(grid, u) * norm(grid, hv)
    assert abs(inner_product(grid, u, hv) - inner_product(grid, hu, v)) <= 1e-12 * scale


def test_hamiltonian_order_contract(sample_grid: Grid3) -> None:
    """Test that only orders 2 and 4 exist."""
    with pytest.raises(ContractError):
        HamiltonianOperator(CoefficientExpr.constant(1), CoefficientExpr.constant(0), sample_grid, order=6)


def test_rayleigh_quotient_of_so4_ground_state(sample_system_one: SystemSpec) -> None:
    """Test ψ = (r² + 1)^(−3/2) on system 1 against the radial FD ground level."""
    validated = validate_params(sample_system_one, ParameterSet())
    [(_, problem)] = solver_forms(sample_system_one, validated, QuantumNumbers(l=0))
    radial = problem.energy(solve(problem, 1, tol=1e-8, n0=255).eigenvalues[0])
    grid = Grid3.from_box(sample_system_one.box, 64)
    x1, x2, x3 = grid.mesh()
    psi = np.broadcast_to((x1**2 + x2**2 + x3**2 + 1) ** -1.5, grid.shape).astype(complex)
    psi[~_interior_mask(grid, 2)] = 0.0

    h_psi = apply_hamiltonian(sample_system_one, {}, grid, psi)

    inner = grid.interior(4)
    quotient = np.vdot(psi[inner], h_psi[inner]).real / np.vdot(psi[inner], psi[inner]).real
    assert radial == pytest.approx(4.5, rel=1e-6)
    assert abs(quotient - radial) <= 10 * grid.max_spacing**2


def _interior_mask(grid: Grid3, layers: int) -> np.ndarray:
    mask = np.zeros(grid.shape, dtype=bool)
    mask[grid.interior(layers)] = True
    return mask
