"""Tests for result files."""
import csv
import json
from pathlib import Path

import pytest

from pdm_spectra.config.schemas import ClaimReport, ResidualReport, SpectrumRow, Verdict
from pdm_spectra.core.errors import DomainError
from pdm_spectra.core.output import (
    EIGEN_COLUMNS,
    RESIDUAL_COLUMNS,
    VerificationRecords,
    format_number,
    load_claims,
    read_json,
    render_markdown,
    write_eigenvalues,
    write_json,
    write_plot_data,
    write_residuals,
)


def _rows(path: Path) -> list:
    with open(path, encoding="utf-8", newline="") as f:
        return list(csv.reader(f))


def test_format_number() -> None:
    """Test cell formatting."""
    assert format_number(None) == ""
    assert format_number(True) == "true"
    assert format_number(0.1) == "0.10000000000000001"
    assert format_number(3) == "3"


def test_write_eigenvalues_empty(tmp_path: Path) -> None:
    """Test that the header is written without rows."""
    path = write_eigenvalues([], tmp_path / "out" / "eigenvalues.csv")

    assert _rows(path) == [EIGEN_COLUMNS]


def test_write_eigenvalues(tmp_path: Path) -> None:
    """Test one spectrum row."""
    row = SpectrumRow(system=11, l_or_kappa=0, aux_qn="radial", k=0, lambda_raw=3.0, lambda_convention=1.5,
                      extrapolated=True, residual=1e-9)

    rows = _rows(write_eigenvalues([row], tmp_path / "eigenvalues.csv"))

    assert rows[1] == ["11", "0", "radial", "0", "3", "1.5", "true", "1.0000000000000001e-09"]


def test_write_residuals(tmp_path: Path, sample_residual_report: ResidualReport) -> None:
    """Test the long form, one row per spacing."""
    rows = _rows(write_residuals([sample_residual_report], tmp_path / "residuals.csv"))

    assert rows[0] == RESIDUAL_COLUMNS
    assert len(rows) == 4
    assert rows[1][0] == "[H, P1]"
    assert rows[1][-1] == "PASS"


def test_json_round_trip(tmp_path: Path, sample_claim_report: ClaimReport) -> None:
    """Test the versioned document and loading claims back."""
    path = write_json(tmp_path / "claims.json", claims=[sample_claim_report])

    data = read_json(path)
    claims = load_claims(path)

    assert data["schema"] == 1
    assert claims[0].verdict is Verdict.CONFIRMED
    assert claims[0].levels[1].claimed == pytest.approx(10.0)


def test_read_json_errors(tmp_path: Path) -> None:
    """Test missing files, bad JSON and wrong schema versions."""
    with pytest.raises(DomainError, match="Missing"):
        read_json(tmp_path / "none.json")

    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(DomainError, match="Invalid"):
        read_json(bad)

    old = tmp_path / "old.json"
    old.write_text(json.dumps({"schema": 0, "claims": []}), encoding="utf-8")
    with pytest.raises(DomainError, match="schema"):
        read_json(old)


def test_verification_records(tmp_path: Path, sample_residual_report: ResidualReport) -> None:
    """Test loading reports.json."""
    path = write_json(tmp_path / "reports.json", residuals=[sample_residual_report], closure=[],
                      casimir_fits=[], susy=[])

    records = VerificationRecords.load(path)

    assert len(records.all_residuals()) == 1
    assert records.residuals[0].passed


def test_write_plot_data(tmp_path: Path, sample_residual_report: ResidualReport) -> None:
    """Test slugged names and duplicate identities."""
    paths = write_plot_data([sample_residual_report, sample_residual_report], tmp_path)

    assert [p.name for p in paths] == ["s1_h_p1_t0.csv", "s1_h_p1_t0_2.csv"]
    rows = _rows(paths[0])
    assert rows[0] == ["spacing", "residual", "log10_spacing", "log10_residual"]
    assert float(rows[1][2]) == pytest.approx(-1.0)


def test_render_markdown(sample_claim_report: ClaimReport, sample_residual_report: ResidualReport) -> None:
    """Test the report sections."""
    text = render_markdown([sample_claim_report], VerificationRecords(residuals=[sample_residual_report]))

    assert text.startswith("# PDM spectra report")
    assert "- CONFIRMED: 1" in text
    assert "### System 11 eg6 (printed)" in text
    assert "## Operator identities" in text
    assert "[H, P1]" in text


def test_render_markdown_empty() -> None:
    """Test placeholders without claims or records."""
    text = render_markdown([], VerificationRecords())

    assert "No claim reports." in text
    assert "No verification records." in text
