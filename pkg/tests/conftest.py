"""Pytest configuration and fixtures."""
import pytest
from pathlib import Path

from pdm_spectra.config.schemas import (
    ClaimReport,
    Convention,
    LevelComparison,
    ParameterSet,
    ResidualReport,
    RunConfig,
    Verdict,
)
from pdm_spectra.core.catalog import Catalog, SystemSpec, load_manifest
from pdm_spectra.core.hamiltonian import Grid3


@pytest.fixture(scope="session")
def sample_catalog() -> Catalog:
    """Sample catalog built from the packaged manifest."""
    return load_manifest()


@pytest.fixture
def sample_system_one(sample_catalog: Catalog) -> SystemSpec:
    """Sample conformally flat system, f = (r² + 1)²."""
    return sample_catalog.get(1)


@pytest.fixture
def sample_system_eleven(sample_catalog: Catalog) -> SystemSpec:
    """Sample power-law system, f = r^(2σ+2)."""
    return sample_catalog.get(11)


@pytest.fixture
def sample_oscillator_params() -> ParameterSet:
    """Sample system 11 parameters meeting the oscillator condition 2κ = −(σ² + 3σ + 2)."""
    return ParameterSet(sigma=1.0, kappa=-3.0, omega=1.0)


@pytest.fixture
def sample_grid() -> Grid3:
    """Sample unit-cube grid with 32 points per axis."""
    return Grid3.from_box(((0.0, 1.0), (0.0, 1.0), (0.0, 1.0)), 32)


@pytest.fixture
def sample_run_config(tmp_path: Path, sample_oscillator_params: ParameterSet) -> RunConfig:
    """Sample solve run for system 11 writing into a temporary directory."""
    return RunConfig(
        system=11,
        params=sample_oscillator_params,
        l_range=(0, 1),
        levels=3,
        grid="coarse",
        out=tmp_path / "run",
    )


@pytest.fixture
def sample_residual_report() -> ResidualReport:
    """Sample second-order residual decay that passes."""
    return ResidualReport.from_residuals(
        "[H, P1]",
        spacings=[0.1, 0.05, 0.025],
        residuals=[1e-2, 2.5e-3, 6.25e-4],
        tolerance=5e-2,
        system=1,
    )


@pytest.fixture
def sample_claim_report() -> ClaimReport:
    """Sample confirmed claim with two levels."""
    return ClaimReport(
        system=11,
        formula="eg6",
        hypothesis="printed",
        convention=Convention.TWO_E,
        raw_units="2E",
        levels=[
            LevelComparison(qn={"l": 0}, index=0, claimed=6.0, oracle=6.0000001, difference=-1e-7),
            LevelComparison(qn={"l": 0}, index=1, claimed=10.0, oracle=10.0000002, difference=-2e-7),
        ],
        verdict=Verdict.CONFIRMED,
        tolerance=1e-5,
    )
