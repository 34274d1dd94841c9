"""Core run orchestration: solves, verifications and reports."""
import logging
from concurrent.futures import ThreadPoolExecutor
from functools import partial
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from ..config.schemas import (
    ClaimReport,
    IdentityVerdict,
    ParameterSet,
    QuantumNumbers,
    ResidualReport,
    RunConfig,
    SpectrumRow,
    ValidatedParams,
    Verdict,
)
from ..config.settings import GridProfile, settings
from . import output
from .catalog import Catalog, SeparationScheme, SystemSpec, validate_params
from .errors import DomainError, UnsupportedError
from .output import VerificationRecords
from .separation import (
    Endpoint,
    SLProblem,
    coupling_problem,
    liouville_log,
    morse_coupling,
    solver_forms,
)
from .spectra import adjudicate, closed_form_claims, level_claims, morse_bound_count, morse_claims
from .sturm import MIN_TARGET_TOL, EigenResult, discretize, solve, sturm_count
from .verify import (
    MIN_FAMILY_POINTS,
    TestField,
    casimir_fit,
    casimir_residual,
    lie_closure,
    morse_susy_check,
    susy_check,
    symmetry_reports,
    symmetry_residual,
)

logger = logging.getLogger(__name__)
console = Console()

# Basic operators that are not symmetries of a system, used as extra controls
CONTROL_OPERATORS: Dict[int, str] = {1: "P1"}

CASIMIR_RELATIONS = ("printed", "derived", "C2")

VERDICT_STYLES = {
    Verdict.CONFIRMED: "green",
    Verdict.SHIFTED: "yellow",
    Verdict.REFUTED: "red",
    Verdict.UNDECIDED: "dim",
}


class TaskResult(BaseModel):
    """Output of one (system, quantum numbers) solve."""
    rows: List[SpectrumRow] = Field(default_factory=list)
    claims: List[ClaimReport] = Field(default_factory=list)
    problems: List[Dict[str, Any]] = Field(default_factory=list)


class SolveOutcome(TaskResult):
    """Collected result of a solve run."""
    files: List[Path] = Field(default_factory=list)

    @property
    def refuted(self) -> bool:
        return any(c.verdict is Verdict.REFUTED for c in self.claims)


class VerifyOutcome(BaseModel):
    """Collected result of a verify run."""
    records: VerificationRecords
    strict_controls: bool = False
    files: List[Path] = Field(default_factory=list)

    def failures(self) -> List[str]:
        """Identities that count against the exit code."""
        out = [
            f"{r.identity} t={r.t:g}" + (" (control)" if r.control else "")
            for r in self.records.residuals
            if not r.passed and (self.strict_controls or not r.control)
        ]
        for s in self.records.susy:
            out += [f"{s.family}: {r.identity}" for r in s.factorization if not r.passed]
            if s.pairing_claim is IdentityVerdict.FAIL:
                out.append(f"{s.family}: zero-shift partner pairing")
        out += [f"system {c.system}: closure rank {c.rank}" for c in self.records.closure if c.rank_deficient]
        return out


def exit_code(outcome: Any) -> int:
    """0 when everything holds, 2 for refuted claims or failed identities."""
    if isinstance(outcome, SolveOutcome):
        return 2 if outcome.refuted else 0
    if isinstance(outcome, VerifyOutcome):
        return 2 if outcome.failures() else 0
    raise TypeError(f"No exit code for {type(outcome).__name__}")


def merge_params(example: ParameterSet, given: ParameterSet) -> ParameterSet:
    """Example parameters of a system overridden by the given ones."""
    changes = {k: v for k, v in given.model_dump().items() if k != "imaginary" and v is not None}
    imaginary = list(given.imaginary) + [n for n in example.imaginary if n not in changes]
    return example.updated(**changes, imaginary=imaginary)


def start_size(grid: str) -> int:
    """1D starting size for a profile name or an explicit `nXXX`."""
    if grid.startswith("n"):
        return _explicit_size(grid)
    return _profile(grid).start_size


def spacings(grid: str) -> Tuple[int, ...]:
    """3D points per axis for a profile name; `nXXX` gives (n/2, 3n/4, n)."""
    if grid.startswith("n"):
        n = _explicit_size(grid)
        if n < 2 * MIN_FAMILY_POINTS:
            raise DomainError(f"3D grid families need n >= {2 * MIN_FAMILY_POINTS}, got {n}")
        return (n // 2, (3 * n) // 4, n)
    return _profile(grid).spacings3d


def _explicit_size(grid: str) -> int:
    try:
        n = int(grid[1:])
    except ValueError:
        raise DomainError(f"Grid must be coarse, standard, fine or nXXX, got '{grid}'") from None
    if n < 16:
        raise DomainError(f"Grid size {n} is too small")
    return n


def _profile(grid: str) -> GridProfile:
    try:
        return GridProfile(grid)
    except ValueError:
        raise DomainError(f"Grid must be coarse, standard, fine or nXXX, got '{grid}'") from None


class SpectraService:
    """Runs solves and verifications for one configuration at a time."""

    def __init__(self, catalog: Catalog, threads: Optional[int] = None):
        """Initialize service.

        Args:
            catalog: Systems catalog
            threads: Worker pool size, default settings.threads
        """
        self.catalog = catalog
        self.threads = threads or settings.threads

    # Configuration

    def resolve(self, config: RunConfig, require_solvable: bool = False) -> Tuple[SystemSpec, ValidatedParams]:
        """Spec and validated parameters; nothing is computed before this succeeds."""
        spec = self.catalog.get(config.system)
        params = merge_params(spec.example, config.params)
        validated = validate_params(spec, params)
        if require_solvable and not spec.is_solvable(params):
            raise UnsupportedError(
                f"System {spec.id} is not separable for kappa != 0 (small symmetry algebra); "
                "only kappa = 0 can be solved"
            )
        logger.debug(f"System {spec.id} parameters {validated.values()} flags {validated.flags}")
        return spec, validated

    @staticmethod
    def quantum_numbers(spec: SystemSpec, config: RunConfig) -> List[QuantumNumbers]:
        """One QuantumNumbers per task: every l of the range for spherical systems."""
        fixed = {k: v for k, v in config.qn.items() if k != "l"}
        if spec.separation is SeparationScheme.SPHERICAL:
            lo, hi = config.l_range
            return [QuantumNumbers(l=l, **fixed) for l in range(lo, hi + 1)]
        return [QuantumNumbers(**fixed)]

    def _prepare(self, problem: SLProblem, config: RunConfig) -> SLProblem:
        if config.box is not None:
            problem = problem.truncate(*config.box)
        bc = config.bc or settings.angular_bc.value
        if bc == "periodic" and problem.variable == "phi" and problem.is_finite:
            problem = problem.model_copy(update={"left": Endpoint.PERIODIC, "right": Endpoint.PERIODIC})
        return problem

    def _map(self, fn: Callable[[Any], Any], items: Sequence[Any]) -> List[Any]:
        """Ordered results of fn over items on the bounded worker pool."""
        if len(items) <= 1 or self.threads == 1:
            return [fn(i) for i in items]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, items))

    # Solve

    @staticmethod
    def _rows(spec: SystemSpec, qn: QuantumNumbers, label: str, problem: SLProblem, result: EigenResult) -> List[SpectrumRow]:
        aux = [label] + [f"{k}={v:g}" for k, v in qn.labels().items() if k not in ("l", "kappa_ang")]
        l_or_kappa = qn.l if qn.l is not None else qn.kappa_ang
        rows = []
        for k, value in enumerate(result.eigenvalues):
            rows.append(
                SpectrumRow(
                    system=spec.id, l_or_kappa=l_or_kappa, aux_qn=";".join(aux), k=k, lambda_raw=value,
                    lambda_convention=None if problem.eigen_scale is None else problem.energy(value),
                    extrapolated=result.extrapolated, residual=result.residuals[k],
                )
            )
        return rows

    def solve_task(
        self, spec: SystemSpec, validated: ValidatedParams, config: RunConfig, qn: QuantumNumbers
    ) -> TaskResult:
        """Eigen-solve every reduced problem for one set of quantum numbers and adjudicate the claims."""
        logger.info(f"Solving system {spec.id} {qn.label()}")
        tol = config.tol or settings.claim_tol
        task = TaskResult()
        primary: Optional[Tuple[SLProblem, EigenResult]] = None
        for label, problem in solver_forms(spec, validated, qn):
            problem = self._prepare(problem, config)
            task.problems.append(problem.dump())
            result = solve(problem, config.levels, max(tol / 10, MIN_TARGET_TOL), start_size(config.grid), qn.labels())
            if result.continuum:
                logger.warning(f"{problem.label}: boxed continuum, levels depend on the window")
            task.rows += self._rows(spec, qn, label, problem, result)
            primary = primary or (problem, result)

        if primary is not None:
            problem, result = primary
            oracle: List[Optional[float]] = [None] * config.levels
            if not result.continuum:
                oracle[: result.count] = result.eigenvalues
            for claims in level_claims(spec, validated, qn, config.levels):
                task.claims.append(adjudicate(claims, oracle, problem, tol))
        task.claims += closed_form_claims(spec, validated, qn)
        return task

    def morse_task(self, spec: SystemSpec, validated: ValidatedParams, nu: float, config: RunConfig) -> TaskResult:
        """Morse form of system 11 at the given ν: bound states, spectrum and eigenfunctions.

        The energy enters as the coupling E = |ω|(ν + s/2), s = 2σ, and the
        coupling-constant problem is carried to ρ = ln r.
        """
        values = validated.values()
        s = 2 * float(np.real(values["sigma"]))
        omega = abs(complex(values["omega"]))
        tol = config.tol or settings.claim_tol
        energy = 0.5 * morse_coupling(nu, s, omega)
        problem = liouville_log(coupling_problem(spec, validated, QuantumNumbers(energy=energy)))
        count = morse_bound_count(nu, s)
        task = TaskResult(problems=[problem.dump()])
        if count == 0:
            logger.warning(f"Morse nu={nu:g} sigma={s:g} has no bound states")
            return task
        result = solve(problem, count, max(tol / 10, MIN_TARGET_TOL), start_size(config.grid))
        found = sturm_count(discretize(problem.truncate(*result.window), result.n), 0.0)
        if found != count:
            logger.warning(f"Morse nu={nu:g}: {found} levels below zero, expected {count}")
        logger.info(f"Morse nu={nu:g} sigma={s:g}: {found} bound states")
        task.rows = self._rows(spec, QuantumNumbers(), f"morse nu={nu:g}", problem, result)
        task.claims = morse_claims(nu, s, omega, result.eigenvalues)
        return task

    def solve(self, config: RunConfig) -> SolveOutcome:
        """Solve all tasks of a configuration and write the result files."""
        spec, validated = self.resolve(config, require_solvable=True)
        if config.morse_nu is not None and spec.id != 11:
            raise DomainError("The Morse form belongs to system 11")
        tasks = self.quantum_numbers(spec, config) if config.levels > 0 else []
        results: List[TaskResult] = self._map(partial(self.solve_task, spec, validated, config), tasks)
        if config.morse_nu is not None:
            results.append(self.morse_task(spec, validated, config.morse_nu, config))

        outcome = SolveOutcome()
        for r in results:
            outcome.rows += r.rows
            outcome.claims += r.claims
            outcome.problems += r.problems
        out = Path(config.out)
        if "csv" in config.formats:
            outcome.files.append(output.write_eigenvalues(outcome.rows, out / output.EIGENVALUES_FILE))
        if "json" in config.formats:
            outcome.files.append(output.write_json(out / output.CLAIMS_FILE, claims=outcome.claims))
            outcome.files.append(output.write_json(out / output.PROBLEMS_FILE, problems=outcome.problems))
        return outcome

    # Verify

    def verify(self, config: RunConfig) -> VerifyOutcome:
        """Run the selected identity families and write reports.json / residuals.csv."""
        spec, validated = self.resolve(config)
        grids = spacings(config.grid)
        field = TestField(seed=config.seed)
        strict = config.controls == "strict"
        records = VerificationRecords()

        if "symmetries" in config.which:
            names = config.generators or spec.generator_names
            runs = self._map(
                lambda name: symmetry_reports(spec, validated, [name], strict, field, grids), names
            )
            for reports in runs:
                records.residuals += reports
            if strict and spec.id in CONTROL_OPERATORS:
                records.residuals.append(
                    symmetry_residual(spec, CONTROL_OPERATORS[spec.id], validated, 0.0, field, grids, control=True)
                )
        if "casimir" in config.which:
            records.residuals += self._map(
                lambda relation: casimir_residual(spec, validated, relation, field, grids), list(CASIMIR_RELATIONS)
            )
            records.casimir_fits.append(casimir_fit(spec, validated, n=grids[-1], seed=config.seed))
        if "closure" in config.which:
            records.closure.append(
                lie_closure(spec, validated, config.generators or None, n=grids[-1], seed=config.seed)
            )
        if "susy" in config.which:
            records.susy += self._susy(spec, validated, config, field)

        outcome = VerifyOutcome(records=records, strict_controls=strict)
        out = Path(config.out)
        if "json" in config.formats:
            outcome.files.append(
                output.write_json(
                    out / output.REPORTS_FILE, residuals=records.residuals, closure=records.closure,
                    casimir_fits=records.casimir_fits, susy=records.susy,
                )
            )
        if "csv" in config.formats:
            outcome.files.append(output.write_residuals(records.all_residuals(), out / output.RESIDUALS_FILE))
        return outcome

    @staticmethod
    def _susy(spec: SystemSpec, validated: ValidatedParams, config: RunConfig, field: TestField) -> List[Any]:
        if spec.id != 11:
            raise DomainError("Supersymmetric factorizations are checked for system 11")
        values = validated.values()
        sigma = float(np.real(values["sigma"]))
        omega = abs(complex(values["omega"]))
        tol = config.tol or settings.claim_tol
        reports = [susy_check(config.l_range[0], sigma, omega, tol=tol, field=field)]
        if config.morse_nu is not None:
            reports.append(morse_susy_check(config.morse_nu, 2 * sigma, omega, tol=tol, field=field))
        return reports

    # Report

    def report(self, run_dir: Path) -> Path:
        """Collate claims.json and reports.json of a run directory into report.md and plot data."""
        claims_path = run_dir / output.CLAIMS_FILE
        reports_path = run_dir / output.REPORTS_FILE
        if not claims_path.exists() and not reports_path.exists():
            raise DomainError(f"No claims.json or reports.json in {run_dir}")
        claims = output.load_claims(claims_path) if claims_path.exists() else []
        records = VerificationRecords.load(reports_path) if reports_path.exists() else None
        path = run_dir / output.REPORT_FILE
        path.write_text(output.render_markdown(claims, records), encoding="utf-8")
        logger.info(f"Report written to {path}")
        if records is not None:
            output.write_plot_data(records.all_residuals(), run_dir / output.PLOT_DIR)
        return path

    # Display

    def show_systems(self, ids: Optional[Sequence[int]] = None) -> None:
        """Print the systems table."""
        table = Table(title="PDM systems with extended Lie symmetries")
        table.add_column("Id", style="cyan", justify="right")
        table.add_column("f(x)", style="green")
        table.add_column("V(x)", style="green")
        table.add_column("Parameters")
        table.add_column("Generators")
        table.add_column("Solvable")
        for spec in self.catalog.all():
            if ids and spec.id not in ids:
                continue
            solvable = "yes" if spec.solvable else "not separable for κ≠0"
            table.add_row(
                str(spec.id), spec.inverse_mass.source, spec.potential.source,
                ", ".join(spec.parameters) or "-", ", ".join(spec.generator_names), solvable,
            )
        console.print(table)

    @staticmethod
    def show_claims(claims: Sequence[ClaimReport]) -> None:
        """Print one line per adjudicated formula."""
        if not claims:
            console.print("[dim]No closed-form claims for this configuration[/dim]")
            return
        table = Table(title="Printed formulas")
        table.add_column("System", style="cyan", justify="right")
        table.add_column("Formula")
        table.add_column("Hypothesis")
        table.add_column("Levels", justify="right")
        table.add_column("Verdict")
        for c in claims:
            style = VERDICT_STYLES[c.verdict]
            table.add_row(str(c.system), c.formula, c.hypothesis, str(len(c.levels)), f"[{style}]{c.verdict.value}[/{style}]")
        console.print(table)

    @staticmethod
    def show_residuals(reports: Sequence[ResidualReport]) -> None:
        """Print the fitted order and verdict of every identity."""
        table = Table(title="Operator identities")
        table.add_column("Identity", style="cyan")
        table.add_column("t", justify="right")
        table.add_column("Order", justify="right")
        table.add_column("Finest residual", justify="right")
        table.add_column("Verdict")
        for r in reports:
            finest = r.residuals[r.spacings.index(min(r.spacings))]
            order = "-" if r.order is None else f"{r.order:.2f}"
            verdict = "[green]PASS[/green]" if r.passed else "[red]FAIL[/red]"
            name = f"{r.identity} (control)" if r.control else r.identity
            table.add_row(name, f"{r.t:g}", order, f"{finest:.2e}", verdict)
        console.print(table)

    def show_verify(self, outcome: VerifyOutcome) -> None:
        records = outcome.records
        if records.all_residuals():
            self.show_residuals(records.all_residuals())
        for c in records.closure:
            worst = max(max(row) for row in c.fit_residuals) if c.fit_residuals else 0.0
            console.print(
                Panel(
                    f"rank {c.rank} of {len(c.generators)}, antisymmetry {c.antisymmetry:.2e}, "
                    f"worst fit residual {worst:.2e}",
                    title=f"Closure, system {c.system}",
                )
            )
        for fit in records.casimir_fits:
            console.print(f"[cyan]Best fit:[/cyan] {fit.casimir} ≈ {fit.alpha:.6g} H + {fit.beta:.6g}")
        for s in records.susy:
            console.print(
                f"[cyan]{s.family} pairing:[/cyan] mean shift {s.pairing_shift:.8g}, "
                f"zero shift {s.pairing_claim.value}, shift {s.expected_shift:g} {s.pairing_corrected.value}"
            )
