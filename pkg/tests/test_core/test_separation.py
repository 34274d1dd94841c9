"""Tests for separation into one-dimensional problems."""
import math

import numpy as np
import pytest

from pdm_spectra.config.schemas import ParameterSet, QuantumNumbers
from pdm_spectra.core.catalog import Catalog, SystemSpec, validate_params
from pdm_spectra.core.errors import DomainError, UnsupportedError
from pdm_spectra.core.output import read_json, write_json
from pdm_spectra.core.separation import (
    Endpoint,
    change_variable,
    coupling_problem,
    deformed_oscillator_delta,
    liouville_log,
    liouville_power,
    make_problem,
    morse_coupling,
    morse_problem,
    radial_problem,
    reduce,
    solver_forms,
)
from pdm_spectra.core.sturm import solve


def test_radial_problem_system_one(sample_system_one: SystemSpec) -> None:
    """Test p = f/2 and q = f′/(2r) + V for f = (r² + 1)², V = −3r²."""
    problem = radial_problem(sample_system_one, {}, 0)

    assert problem.variable == "r"
    assert problem.left is Endpoint.SINGULAR
    assert float(problem.p.evaluate_real(1.0)) == pytest.approx(2.0)
    assert float(problem.q.evaluate_real(1.0)) == pytest.approx(1.0)
    assert float(problem.q.evaluate_real(2.0)) == pytest.approx(-2.0)


def test_radial_problem_centrifugal_term(sample_system_one: SystemSpec) -> None:
    """Test the l(l+1) f/(2r²) term."""
    q0 = radial_problem(sample_system_one, {}, 0).q
    q1 = radial_problem(sample_system_one, {}, 1).q

    assert float(q1.evaluate_real(1.0) - q0.evaluate_real(1.0)) == pytest.approx(4.0)


def test_make_problem_rejects_empty_interval() -> None:
    """Test that a < b is enforced."""
    with pytest.raises(ValueError):
        make_problem("bad", "x", "1", "0", "1", (1.0, 0.0))


def test_periodic_needs_both_endpoints() -> None:
    """Test rejecting a half-periodic problem."""
    with pytest.raises(ValueError):
        make_problem("bad", "phi", "1", "0", "1", (0.0, 2 * math.pi), left=Endpoint.PERIODIC)


def test_truncate_sets_dirichlet_walls(sample_system_one: SystemSpec) -> None:
    """Test that new finite ends become Dirichlet."""
    problem = radial_problem(sample_system_one, {}, 0).truncate(0.0, 5.0)

    assert problem.is_finite
    assert problem.left is Endpoint.SINGULAR
    assert problem.right is Endpoint.DIRICHLET


def test_change_variable_keeps_form() -> None:
    """Test x = e^y on −u″ = λu."""
    problem = make_problem("flat", "x", "1", "0", "1", (0.0, math.inf))

    y = change_variable(problem, "y", "exp(y)", (-math.inf, math.inf))

    assert y.variable == "y"
    assert float(y.p.evaluate_real(0.5)) == pytest.approx(math.exp(-0.5))
    assert float(y.w.evaluate_real(0.5)) == pytest.approx(math.exp(0.5))
    assert float(y.chart.evaluate_real(0.0)) == pytest.approx(1.0)


def test_energy_conversion() -> None:
    """Test λ = scale·E + shift."""
    problem = make_problem("p", "x", "1", "0", "1", (0.0, 1.0), eigen_scale=2.0, eigen_shift=0.5)

    assert problem.energy(4.5) == pytest.approx(2.0)
    constant = make_problem("c", "x", "1", "0", "1", (0.0, 1.0), eigen_scale=None)
    with pytest.raises(DomainError):
        constant.energy(1.0)


def test_reduce_requires_l(sample_system_one: SystemSpec) -> None:
    """Test that spherical systems need l."""
    validated = validate_params(sample_system_one, ParameterSet())

    with pytest.raises(DomainError, match="'l'"):
        reduce(sample_system_one, validated, QuantumNumbers())


def test_reduce_non_separable(sample_catalog: Catalog) -> None:
    """Test system 4 with κ ≠ 0."""
    spec = sample_catalog.get(4)
    validated = validate_params(spec, ParameterSet(kappa=0.5, lam=0.8))

    with pytest.raises(UnsupportedError):
        reduce(spec, validated, QuantumNumbers(kappa_ang=1))


def test_reduce_cylindrical_labels(sample_catalog: Catalog) -> None:
    """Test the two problems of system 8."""
    spec = sample_catalog.get(8)
    validated = validate_params(spec, spec.example)

    labels = [label for label, _ in reduce(spec, validated, QuantumNumbers(omega_ax=0.5))]

    assert labels == ["angular", "radial"]


def test_reduce_needs_energy_coupling(sample_catalog: Catalog) -> None:
    """Test that system 9 needs E as a coupling."""
    spec = sample_catalog.get(9)
    validated = validate_params(spec, spec.example)

    with pytest.raises(DomainError, match="energy"):
        reduce(spec, validated, QuantumNumbers())


def test_deformed_oscillator_delta() -> None:
    """Test δ = ¾(σ+1)(σ+3) + 2κ."""
    assert deformed_oscillator_delta(1.0, -3.0) == pytest.approx(0.0)
    assert deformed_oscillator_delta(2.0, 1.0) == pytest.approx(0.75 * 15 + 2)


def test_liouville_power_oscillator(
    sample_system_eleven: SystemSpec, sample_oscillator_params: ParameterSet
) -> None:
    """Test the oscillator form −σ²v″ + [(L+δ)/z² + ω²z²]v = 2Ev at δ = 0."""
    values = sample_oscillator_params.values()
    z = np.array([0.5, 1.0, 2.0])

    for l in (0, 1):
        problem = liouville_power(radial_problem(sample_system_eleven, values, l), 1.0)
        assert problem.variable == "z"
        assert problem.eigen_symbol == "2E"
        assert problem.p.evaluate_real(z) == pytest.approx(np.ones(3))
        assert problem.q.evaluate_real(z) == pytest.approx(l * (l + 1) / z**2 + z**2)


def test_solver_form_system_one(sample_system_one: SystemSpec) -> None:
    """Test the finite s-interval of system 1."""
    validated = validate_params(sample_system_one, ParameterSet())

    [(label, problem)] = solver_forms(sample_system_one, validated, QuantumNumbers(l=0))

    assert label == "radial"
    assert problem.variable == "s"
    assert problem.is_finite
    assert problem.b == pytest.approx(math.pi / math.sqrt(2))
    assert float(problem.p.evaluate_real(0.5)) == pytest.approx(1.0)


def test_morse_problem() -> None:
    """Test the Morse problem and its coupling."""
    problem = morse_problem(2.5, 1.0, 1.0)

    assert morse_coupling(2.5, 1.0, 1.0) == pytest.approx(6.0)
    assert problem.eigen_symbol == "eps_hat"
    assert not problem.is_finite
    assert float(problem.q.evaluate_real(0.0)) == pytest.approx(1.0 - 6.0)
    with pytest.raises(DomainError):
        morse_problem(2.5, 1.0, 0.0)


def test_dump_record(sample_system_one: SystemSpec) -> None:
    """Test the problem dump."""
    record = radial_problem(sample_system_one, {}, 0).dump()

    assert record["variable"] == "r"
    assert record["endpoints"] == ["natural-singular", "natural-singular"]
    assert record["interval"] == [0.0, "inf"]


def test_dump_unbounded_problem_round_trip(tmp_path) -> None:
    """Test that a full-line problem survives problems.json."""
    path = write_json(tmp_path / "problems.json", problems=[morse_problem(2.5, 1.0, 1.0).dump()])

    [record] = read_json(path)["problems"]

    assert record["interval"] == ["-inf", "inf"]
    assert [float(x) for x in record["interval"]] == [-math.inf, math.inf]
    assert record["eigenvalue"] == "eps_hat"


@pytest.fixture
def sample_coupling_params(sample_system_eleven: SystemSpec):
    """Sample system 11 at mass exponent s = 1 (σ = ½), ω = 1."""
    return validate_params(sample_system_eleven, ParameterSet(sigma=0.5, kappa=-1.0, omega=1.0))


def test_coupling_problem(sample_system_eleven: SystemSpec, sample_coupling_params) -> None:
    """Test −(r^{s+4}R′)′ + (ω²r^{2−s} − 2E r²)R = ε r^{s+2}R."""
    problem = coupling_problem(sample_system_eleven, sample_coupling_params, QuantumNumbers(energy=2.5))

    assert problem.eigen_symbol == "eps"
    assert problem.eigen_scale is None
    assert float(problem.p.evaluate_real(2.0)) == pytest.approx(2.0**5)
    assert float(problem.q.evaluate_real(2.0)) == pytest.approx(2.0 - 5.0 * 4.0)
    assert float(problem.w.evaluate_real(2.0)) == pytest.approx(2.0**3)
    assert problem.constants == {"s": 1.0, "omega": 1.0, "mu": -5.0}


def test_coupling_problem_errors(sample_catalog: Catalog, sample_system_eleven: SystemSpec) -> None:
    """Test ω = 0, a missing energy and other systems."""
    flat = validate_params(sample_system_eleven, ParameterSet(sigma=1.0, kappa=-3.0, omega=0.0))
    with pytest.raises(DomainError):
        coupling_problem(sample_system_eleven, flat, QuantumNumbers(energy=1.0))

    valid = validate_params(sample_system_eleven, ParameterSet(sigma=1.0, kappa=-3.0, omega=1.0))
    with pytest.raises(DomainError):
        coupling_problem(sample_system_eleven, valid, QuantumNumbers())

    spec = sample_catalog.get(1)
    with pytest.raises(DomainError):
        coupling_problem(spec, validate_params(spec, ParameterSet()), QuantumNumbers(energy=1.0))


def test_liouville_log_morse_form(sample_system_eleven: SystemSpec, sample_coupling_params) -> None:
    """Test the e^{−sρ} coefficient 2ων + ωs = 5 at ν = 2 and the shift ε̂ = ε − 4."""
    coupling = coupling_problem(sample_system_eleven, sample_coupling_params, QuantumNumbers(energy=2.5))

    problem = liouville_log(coupling)

    assert problem.variable == "rho"
    assert problem.eigen_symbol == "eps_hat"
    assert problem.eigen_shift == pytest.approx(-4.0)
    assert morse_coupling(2.0, 1.0, 1.0) == pytest.approx(5.0)
    rho = np.linspace(-2.0, 3.0, 11)
    assert problem.q.evaluate_real(rho) == pytest.approx(np.exp(-2 * rho) - 5.0 * np.exp(-rho))
    assert problem.q.evaluate_real(rho) == pytest.approx(morse_problem(2.0, 1.0, 1.0).q.evaluate_real(rho))
    assert float(problem.p.evaluate_real(0.7)) == pytest.approx(1.0)


def test_liouville_log_spectrum_matches_morse(sample_system_eleven: SystemSpec, sample_coupling_params) -> None:
    """Test that the transformed coupling problem has the Morse levels −(ν − n s)²."""
    coupling = coupling_problem(sample_system_eleven, sample_coupling_params, QuantumNumbers(energy=2.5))

    result = solve(liouville_log(coupling), 2, tol=1e-8, n0=255)

    assert result.eigenvalues == pytest.approx([-4.0, -1.0], abs=1e-5)


def test_liouville_log_needs_coupling_constants() -> None:
    """Test ω = 0 and problems that are not on (0, ∞) in r."""
    bare = make_problem("bare", "r", "r**5", "r**2", "r**3", (0.0, math.inf))
    with pytest.raises(DomainError):
        liouville_log(bare)
    flat = bare.model_copy(update={"constants": {"s": 1.0, "omega": 0.0, "mu": -5.0}})
    with pytest.raises(DomainError):
        liouville_log(flat)
    with pytest.raises(DomainError):
        liouville_log(morse_problem(2.5, 1.0, 1.0))
