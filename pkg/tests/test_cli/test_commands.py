"""Tests for the command-line interface."""
from pathlib import Path

import pytest
import typer
from typer.testing import CliRunner

from pdm_spectra.cli.commands import app, build_config
from pdm_spectra.config.schemas import ClaimReport, ResidualReport, RunConfig, Verdict
from pdm_spectra.core.errors import DomainError
from pdm_spectra.core.output import VerificationRecords
from pdm_spectra.core.service import SolveOutcome, VerifyOutcome

runner = CliRunner()


@pytest.fixture
def mock_service(mocker):
    """Sample service double returned by the factory."""
    service = mocker.MagicMock()
    mocker.patch("pdm_spectra.cli.commands.create_service", return_value=service)
    return service


def test_build_config_from_flags() -> None:
    """Test flags without a run file."""
    config = build_config(None, system=11, set_values=["sigma=1", "k=-3"], l_range="0:2", levels=2,
                          formats="json", box="0:6")

    assert config.system == 11
    assert config.params.kappa == -3.0
    assert config.l_range == (0, 2)
    assert config.formats == ["json"]
    assert config.box == (0.0, 6.0)


def test_build_config_merges_file(tmp_path: Path) -> None:
    """Test that --set updates the file's parameters."""
    path = tmp_path / "run.yaml"
    path.write_text("system: 11\nparams:\n  sigma: 1.0\n  kappa: -3.0\n", encoding="utf-8")

    config = build_config(path, set_values=["omega=2"], levels=3)

    assert config.params.sigma == 1.0
    assert config.params.omega == 2.0
    assert config.levels == 3


def test_build_config_errors() -> None:
    """Test a missing system and malformed ranges."""
    with pytest.raises(typer.BadParameter):
        build_config(None, levels=2)
    with pytest.raises(typer.BadParameter):
        build_config(None, system=1, l_range="3")
    with pytest.raises(typer.BadParameter):
        build_config(None, system=1, qn_values=["energy=high"])


def test_list_command() -> None:
    """Test listing the packaged systems."""
    result = runner.invoke(app, ["list", "-s", "11"])

    assert result.exit_code == 0


def test_info_command() -> None:
    """Test the configuration table."""
    result = runner.invoke(app, ["info"])

    assert result.exit_code == 0
    assert "11 systems" in result.stdout


def test_solve_confirmed(mock_service, sample_claim_report: ClaimReport, tmp_path: Path) -> None:
    """Test exit code 0 and the config handed to the service."""
    mock_service.solve.return_value = SolveOutcome(claims=[sample_claim_report])

    result = runner.invoke(
        app, ["solve", "-s", "11", "--set", "sigma=1", "--set", "kappa=-3", "--set", "omega=1", "-k", "2",
              "-o", str(tmp_path)],
    )

    assert result.exit_code == 0
    config: RunConfig = mock_service.solve.call_args[0][0]
    assert config.system == 11
    assert config.levels == 2
    assert config.out == tmp_path


def test_solve_refuted(mock_service, sample_claim_report: ClaimReport) -> None:
    """Test exit code 2 for a refuted formula."""
    refuted = sample_claim_report.model_copy(update={"verdict": Verdict.REFUTED})
    mock_service.solve.return_value = SolveOutcome(claims=[refuted])

    result = runner.invoke(app, ["solve", "-s", "11"])

    assert result.exit_code == 2
    assert "refuted" in result.stdout


def test_solve_operational_error(mock_service) -> None:
    """Test exit code 1 when the service rejects the run."""
    mock_service.solve.side_effect = DomainError("sigma must be non-zero")

    result = runner.invoke(app, ["solve", "-s", "11"])

    assert result.exit_code == 1
    assert "sigma must be non-zero" in result.stdout


def test_solve_requires_system(mock_service) -> None:
    """Test exit code 1 without --system or --config."""
    result = runner.invoke(app, ["solve", "-k", "2"])

    assert result.exit_code == 1
    mock_service.solve.assert_not_called()


def test_verify_failures(mock_service, sample_residual_report: ResidualReport) -> None:
    """Test exit code 2 when an identity fails."""
    failed = ResidualReport.from_residuals(
        "[H, M41]", spacings=[0.1, 0.05, 0.025], residuals=[0.3, 0.3, 0.3], tolerance=5e-2, system=1
    )
    mock_service.verify.return_value = VerifyOutcome(
        records=VerificationRecords(residuals=[sample_residual_report, failed])
    )

    result = runner.invoke(app, ["verify", "-s", "1", "-w", "symmetries", "-g", "M41"])

    assert result.exit_code == 2
    assert "1 identities failed" in result.stdout
    config: RunConfig = mock_service.verify.call_args[0][0]
    assert config.generators == ["M41"]


def test_verify_passes(mock_service, sample_residual_report: ResidualReport) -> None:
    """Test exit code 0 when every identity holds."""
    mock_service.verify.return_value = VerifyOutcome(records=VerificationRecords(residuals=[sample_residual_report]))

    result = runner.invoke(app, ["verify", "-s", "1"])

    assert result.exit_code == 0
    assert "All identities hold" in result.stdout


def test_verify_rejects_unknown_family(mock_service) -> None:
    """Test exit code 1 for an unknown identity family."""
    result = runner.invoke(app, ["verify", "-s", "1", "-w", "everything"])

    assert result.exit_code == 1
    mock_service.verify.assert_not_called()


def test_report_command(mock_service, tmp_path: Path) -> None:
    """Test the report path is printed."""
    mock_service.report.return_value = tmp_path / "report.md"

    result = runner.invoke(app, ["report", str(tmp_path)])

    assert result.exit_code == 0
    mock_service.report.assert_called_once_with(tmp_path)
