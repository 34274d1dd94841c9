"""Result files: eigenvalue and residual CSVs, versioned JSON reports, plot data, markdown."""
import csv
import json
import logging
import math
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, Field

from ..config.schemas import (
    CasimirFit,
    ClaimReport,
    ClosureReport,
    ResidualReport,
    SpectrumRow,
    SusyReport,
    Verdict,
)
from .errors import DomainError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

EIGEN_COLUMNS = [
    "system", "l_or_kappa", "aux_qn", "k", "lambda_raw", "lambda_convention", "extrapolated", "residual",
]
RESIDUAL_COLUMNS = ["identity", "system", "t", "control", "spacing", "residual", "order", "verdict"]
PLOT_COLUMNS = ["spacing", "residual", "log10_spacing", "log10_residual"]

EIGENVALUES_FILE = "eigenvalues.csv"
CLAIMS_FILE = "claims.json"
PROBLEMS_FILE = "problems.json"
REPORTS_FILE = "reports.json"
RESIDUALS_FILE = "residuals.csv"
REPORT_FILE = "report.md"
PLOT_DIR = "plots"


def format_number(value: Any) -> str:
    """Cell text: 17 significant digits for floats, empty for None."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _write_csv(path: Path, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_number(v) for v in row])
    logger.info(f"Wrote {len(rows)} rows to {path}")
    return path


def write_eigenvalues(rows: Sequence[SpectrumRow], path: Path) -> Path:
    """eigenvalues.csv; the header is written even for an empty spectrum."""
    return _write_csv(path, EIGEN_COLUMNS, [[getattr(r, c) for c in EIGEN_COLUMNS] for r in rows])


def write_residuals(reports: Sequence[ResidualReport], path: Path) -> Path:
    """residuals.csv in long form, one row per identity and spacing."""
    rows: List[List[Any]] = []
    for report in reports:
        for h, r in zip(report.spacings, report.residuals):
            rows.append([
                report.identity, report.system, report.t, report.control, h, r, report.order,
                report.verdict.value,
            ])
    return _write_csv(path, RESIDUAL_COLUMNS, rows)


def _dump(item: Any) -> Any:
    if isinstance(item, BaseModel):
        return item.model_dump(mode="json")
    return item


def write_json(path: Path, **sections: Sequence[Any]) -> Path:
    """Versioned JSON document with sorted keys, one list per section."""
    payload: Dict[str, Any] = {"schema": SCHEMA_VERSION}
    for name, items in sections.items():
        payload[name] = [_dump(i) for i in items]
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, sort_keys=True, indent=2, allow_nan=False)
        f.write("\n")
    logger.info(f"Wrote {path}")
    return path


def read_json(path: Path) -> Dict[str, Any]:
    """Load a document written by write_json, checking the schema version."""
    if not path.exists():
        raise DomainError(f"Missing input: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise DomainError(f"Invalid JSON in {path}: {e}") from e
    if not isinstance(data, dict) or data.get("schema") != SCHEMA_VERSION:
        raise DomainError(f"{path} is not a schema {SCHEMA_VERSION} document")
    return data


def load_claims(path: Path) -> List[ClaimReport]:
    return [ClaimReport.model_validate(c) for c in read_json(path).get("claims", [])]


class VerificationRecords(BaseModel):
    """Everything a verify run stores in reports.json."""
    residuals: List[ResidualReport] = Field(default_factory=list)
    closure: List[ClosureReport] = Field(default_factory=list)
    casimir_fits: List[CasimirFit] = Field(default_factory=list)
    susy: List[SusyReport] = Field(default_factory=list)

    @classmethod
    def load(cls, path: Path) -> "VerificationRecords":
        data = read_json(path)
        data.pop("schema")
        return cls.model_validate(data)

    def all_residuals(self) -> List[ResidualReport]:
        """Stand-alone residual reports followed by the SUSY factorization reports."""
        out = list(self.residuals)
        for s in self.susy:
            out.extend(s.factorization)
        return out


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_").lower() or "identity"


def write_plot_data(reports: Sequence[ResidualReport], directory: Path) -> List[Path]:
    """One log-log CSV (spacing against residual) per identity."""
    paths: List[Path] = []
    seen: Dict[str, int] = {}
    for report in reports:
        stem = _slug(f"s{report.system or 0}_{report.identity}_t{report.t:g}" + ("_control" if report.control else ""))
        seen[stem] = seen.get(stem, 0) + 1
        if seen[stem] > 1:
            stem = f"{stem}_{seen[stem]}"
        rows = [
            [h, r, math.log10(h), math.log10(r) if r > 0 else None]
            for h, r in zip(report.spacings, report.residuals)
        ]
        paths.append(_write_csv(directory / f"{stem}.csv", PLOT_COLUMNS, rows))
    return paths


def _cell(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.10g}"


def _claims_markdown(claims: Sequence[ClaimReport]) -> List[str]:
    lines = ["## Printed formulas", ""]
    if not claims:
        return lines + ["No claim reports.", ""]
    lines += [
        "| system | formula | hypothesis | convention | units | verdict | shift | note |",
        "|---|---|---|---|---|---|---|---|",
    ]
    for c in claims:
        lines.append(
            f"| {c.system} | {c.formula} | {c.hypothesis} | {c.convention.value} | {c.raw_units} | "
            f"{c.verdict.value} | {_cell(c.shift)} | {c.note or ''} |"
        )
    lines.append("")
    for c in claims:
        if not c.levels:
            continue
        title = "Morse levels" if c.formula == "morse" else f"System {c.system} {c.formula} ({c.hypothesis})"
        lines += [f"### {title}", "", "| level | quantum numbers | claimed | oracle | difference | residual |",
                  "|---|---|---|---|---|---|"]
        for i, level in enumerate(c.levels):
            qn = ", ".join(f"{k}={v:g}" for k, v in sorted(level.qn.items())) or "-"
            residual = c.residuals[i] if i < len(c.residuals) else None
            lines.append(
                f"| {level.index} | {qn} | {_cell(level.claimed)} | {_cell(level.oracle)} | "
                f"{_cell(level.difference)} | {_cell(residual)} |"
            )
        lines.append("")
    return lines


def _identities_markdown(records: VerificationRecords) -> List[str]:
    lines = ["## Operator identities", ""]
    reports = records.all_residuals()
    if reports:
        lines += ["| system | identity | t | control | order | finest residual | verdict |",
                  "|---|---|---|---|---|---|---|"]
        for r in reports:
            finest = r.residuals[r.spacings.index(min(r.spacings))]
            lines.append(
                f"| {r.system if r.system is not None else '-'} | {r.identity} | {r.t:g} | "
                f"{'yes' if r.control else 'no'} | {_cell(r.order)} | {finest:.3e} | {r.verdict.value} |"
            )
        lines.append("")
    for c in records.closure:
        worst = max(max(row) for row in c.fit_residuals) if c.fit_residuals else 0.0
        lines += [
            f"Closure of system {c.system} ({', '.join(c.generators)}): rank {c.rank}, "
            f"antisymmetry {c.antisymmetry:.3e}, worst fit residual {worst:.3e}.", "",
        ]
    for fit in records.casimir_fits:
        lines += [f"Best fit {fit.casimir} = {fit.alpha:.8g} H + {fit.beta:.8g} (residual {fit.residual:.3e}).", ""]
    for s in records.susy:
        params = ", ".join(f"{k}={v:g}" for k, v in sorted(s.parameters.items()))
        lines += [
            f"### Partner spectrum, {s.family} ({params})", "",
            f"Mean shift {s.pairing_shift:.10g}; zero-shift relation {s.pairing_claim.value}; "
            f"relation with shift {s.expected_shift:g} {s.pairing_corrected.value}.", "",
            "| k | upper | partner | difference |", "|---|---|---|---|",
        ]
        lines += [f"| {p.k} | {p.upper:.10g} | {p.partner:.10g} | {p.difference:.3e} |" for p in s.pairing]
        lines.append("")
    if len(lines) == 2:
        lines += ["No verification records.", ""]
    return lines


def render_markdown(claims: Sequence[ClaimReport], records: Optional[VerificationRecords]) -> str:
    """Human-readable summary of one run directory."""
    counts = {v: sum(1 for c in claims if c.verdict is v) for v in Verdict}
    lines = ["# PDM spectra report", ""]
    lines += [f"- {v.value}: {n}" for v, n in counts.items()]
    lines.append("")
    lines += _claims_markdown(claims)
    if records is not None:
        lines += _identities_markdown(records)
    return "\n".join(lines).rstrip() + "\n"
