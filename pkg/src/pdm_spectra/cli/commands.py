"""Typer CLI commands."""
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from ..config.schemas import ParameterSet, RunConfig
from ..config.settings import settings
from ..core.catalog import load_manifest
from ..core.errors import ContractError, ConvergenceError, DomainError, UnsupportedError
from ..core.service import SpectraService, exit_code, merge_params
from ..utils.logger import set_level

app = typer.Typer(
    name="pdm-spectra",
    help="Spectra and symmetry verification for position-dependent-mass Schrödinger systems",
    add_completion=False
)
console = Console()

OPERATIONAL_ERRORS = (
    DomainError, ContractError, UnsupportedError, ConvergenceError, ValidationError, ValueError, typer.BadParameter,
)


def create_service() -> SpectraService:
    """Factory to create a configured SpectraService.

    Returns:
        Service over the configured systems manifest
    """
    catalog = load_manifest(settings.manifest_path)
    return SpectraService(catalog=catalog, threads=settings.threads)


def _set_verbose(verbose: bool) -> None:
    if verbose:
        set_level("DEBUG")


def _pair(text: Optional[str], what: str) -> Optional[Tuple[float, float]]:
    """Parse `a:b`."""
    if text is None:
        return None
    parts = text.split(":")
    if len(parts) != 2:
        raise typer.BadParameter(f"{what} must look like a:b, got '{text}'")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise typer.BadParameter(f"{what} must hold two numbers, got '{text}'") from None


def _assignments(items: List[str]) -> Dict[str, float]:
    out: Dict[str, float] = {}
    for item in items:
        if "=" not in item:
            raise typer.BadParameter(f"Expected name=value, got '{item}'")
        name, value = (p.strip() for p in item.split("=", 1))
        try:
            out[name] = float(value)
        except ValueError:
            raise typer.BadParameter(f"Quantum number '{name}' needs a number, got '{value}'") from None
    return out


def build_config(config_file: Optional[Path], **flags: Any) -> RunConfig:
    """Run configuration from an optional YAML file with command-line flags on top.

    Args:
        config_file: Declarative run file, or None
        **flags: Flag values; None means not given

    Returns:
        Validated RunConfig
    """
    overrides: Dict[str, Any] = {}
    if flags.get("set_values"):
        overrides["params"] = ParameterSet.from_assignments(flags["set_values"])
    if flags.get("qn_values"):
        overrides["qn"] = _assignments(flags["qn_values"])
    l_range = _pair(flags.get("l_range"), "--l-range")
    if l_range is not None:
        overrides["l_range"] = (int(l_range[0]), int(l_range[1]))
    overrides["box"] = _pair(flags.get("box"), "--box")
    if flags.get("formats"):
        overrides["formats"] = [f.strip() for f in flags["formats"].split(",") if f.strip()]
    if flags.get("which"):
        overrides["which"] = [w.strip() for w in flags["which"].split(",") if w.strip()]
    if flags.get("generators"):
        overrides["generators"] = flags["generators"]
    for key in ("system", "levels", "grid", "tol", "bc", "out", "seed", "controls", "morse_nu"):
        overrides[key] = flags.get(key)

    if config_file is not None:
        if "params" in overrides:
            # flags update the file's parameters instead of replacing them
            overrides["params"] = merge_params(RunConfig.from_file(config_file).params, overrides["params"])
        return RunConfig.from_file(config_file, **overrides)
    if overrides.get("system") is None:
        raise typer.BadParameter("--system is required without --config")
    return RunConfig(**{k: v for k, v in overrides.items() if v is not None})


@app.command("list")
def list_systems(
    system: Optional[List[int]] = typer.Option(
        None,
        "--system", "-s",
        help="Show only these system ids (repeatable)"
    ),
) -> None:
    """List the PDM systems with their generators.

    Example:
        pdm-spectra list
        pdm-spectra list -s 4 -s 11
    """
    try:
        service = create_service()
    except OPERATIONAL_ERRORS as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(1)
    service.show_systems(system or None)


@app.command()
def solve(
    system: Optional[int] = typer.Option(None, "--system", "-s", help="System id 1..11"),
    set_values: Optional[List[str]] = typer.Option(
        None,
        "--set",
        help="Parameter assignment name=value, repeatable; a trailing i marks an imaginary value"
    ),
    qn_values: Optional[List[str]] = typer.Option(
        None,
        "--qn",
        help="Fixed quantum number name=value (kappa_ang, omega_ax, k1, k2, k3, energy), repeatable"
    ),
    l_range: Optional[str] = typer.Option(None, "--l-range", help="Range of l as a:b"),
    levels: Optional[int] = typer.Option(None, "--levels", "-k", help="Levels per problem"),
    grid: Optional[str] = typer.Option(None, "--grid", help="coarse | standard | fine | nXXX"),
    box: Optional[str] = typer.Option(None, "--box", help="Solve window lo:hi in the solver variable"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Claim tolerance"),
    bc: Optional[str] = typer.Option(None, "--bc", help="Angular endpoints: dirichlet | periodic"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
    formats: Optional[str] = typer.Option(None, "--format", help="Comma separated: csv,json"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Random seed"),
    morse_nu: Optional[float] = typer.Option(None, "--morse-nu", help="System 11: also solve the Morse form at this nu"),
    config_file: Optional[Path] = typer.Option(
        None,
        "--config", "-c",
        help="YAML run file; flags override its values",
        exists=True,
        dir_okay=False
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
) -> None:
    """Solve the reduced eigenproblems and adjudicate the printed spectra.

    Writes eigenvalues.csv, claims.json and problems.json. Exits with 2 when
    a printed formula is refuted.

    Example:
        pdm-spectra solve -s 11 --set sigma=1 --set kappa=-3 --set omega=1 --l-range 0:2 -k 4
        pdm-spectra solve -s 11 --morse-nu 2.5 -o ./runs/morse
        pdm-spectra solve -c run.yaml --grid fine
    """
    _set_verbose(verbose)
    try:
        config = build_config(
            config_file, system=system, set_values=set_values, qn_values=qn_values, l_range=l_range,
            levels=levels, grid=grid, box=box, tol=tol, bc=bc, out=out,
            formats=formats, seed=seed, morse_nu=morse_nu,
        )
        service = create_service()
        outcome = service.solve(config)
    except OPERATIONAL_ERRORS as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(1)

    console.print(f"\n[bold]System {config.system}:[/bold] {len(outcome.rows)} levels")
    service.show_claims(outcome.claims)
    for path in outcome.files:
        console.print(f"[green]✓[/green] {path}")
    code = exit_code(outcome)
    if code:
        console.print("\n[bold yellow]Printed formula refuted[/bold yellow]")
        raise typer.Exit(code)
    console.print("\n[bold green]✓ Solve complete![/bold green]")


@app.command()
def verify(
    system: Optional[int] = typer.Option(None, "--system", "-s", help="System id 1..11"),
    set_values: Optional[List[str]] = typer.Option(None, "--set", help="Parameter assignment name=value"),
    which: Optional[str] = typer.Option(
        None,
        "--which", "-w",
        help="Comma separated: symmetries, casimir, closure, susy"
    ),
    generators: Optional[List[str]] = typer.Option(
        None,
        "--generator", "-g",
        help="Only these generators (repeatable)"
    ),
    l_range: Optional[str] = typer.Option(None, "--l-range", help="SUSY: l as a:b, the first value is used"),
    grid: Optional[str] = typer.Option(None, "--grid", help="coarse | standard | fine | nXXX"),
    tol: Optional[float] = typer.Option(None, "--tol", help="Pairing tolerance"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
    formats: Optional[str] = typer.Option(None, "--format", help="Comma separated: csv,json"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Test-field seed"),
    controls: Optional[str] = typer.Option(
        None,
        "--controls",
        help="strict: run negative controls and count them in the exit code; off: skip them"
    ),
    morse_nu: Optional[float] = typer.Option(None, "--morse-nu", help="SUSY: also factorize the Morse form"),
    config_file: Optional[Path] = typer.Option(
        None,
        "--config", "-c",
        help="YAML run file; flags override its values",
        exists=True,
        dir_okay=False
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
) -> None:
    """Check symmetries, Casimir relations, closure and factorizations on grid families.

    Writes reports.json and residuals.csv. Exits with 2 when an identity fails.

    Example:
        pdm-spectra verify -s 1 -w symmetries,casimir,closure
        pdm-spectra verify -s 1 -g M41 --controls strict
        pdm-spectra verify -s 11 -w susy --morse-nu 2.5
    """
    _set_verbose(verbose)
    try:
        config = build_config(
            config_file, system=system, set_values=set_values, which=which, generators=generators,
            l_range=l_range, grid=grid, tol=tol, out=out, formats=formats,
            seed=seed, controls=controls, morse_nu=morse_nu,
        )
        service = create_service()
        outcome = service.verify(config)
    except OPERATIONAL_ERRORS as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(1)

    service.show_verify(outcome)
    for path in outcome.files:
        console.print(f"[green]✓[/green] {path}")
    failures = outcome.failures()
    if failures:
        console.print(f"\n[bold yellow]{len(failures)} identities failed:[/bold yellow]")
        for name in failures:
            console.print(f"  [red]✗[/red] {name}")
        raise typer.Exit(exit_code(outcome))
    console.print("\n[bold green]✓ All identities hold![/bold green]")


@app.command()
def report(
    run_dir: Path = typer.Argument(
        ...,
        help="Directory holding claims.json and/or reports.json",
        file_okay=False
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging"),
) -> None:
    """Collate a run directory into report.md and log-log plot data.

    Example:
        pdm-spectra report ./output
    """
    _set_verbose(verbose)
    try:
        service = create_service()
        path = service.report(run_dir)
    except OPERATIONAL_ERRORS as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(1)

    console.print(f"\n[bold green]✓ Report generated successfully![/bold green]")
    console.print(f"[green]Output:[/green] {path}")


@app.command()
def info() -> None:
    """Show configuration and system information."""
    table = Table(title="PDM Spectra Configuration")

    table.add_column("Setting", style="cyan")
    table.add_column("Value", style="green")

    table.add_row("Threads", str(settings.threads))
    table.add_row("Seed", str(settings.seed))
    table.add_row("Grid Profile", settings.grid_profile.value)
    table.add_row("3D Spacings", ", ".join(str(n) for n in settings.grid_profile.spacings3d))
    table.add_row("1D Start Size", str(settings.grid_profile.start_size))
    table.add_row("Residual Tol", f"{settings.residual_tol:g}")
    table.add_row("Claim Tol", f"{settings.claim_tol:g}")
    table.add_row("Min Order", f"{settings.min_order:g}")
    table.add_row("Angular BC", settings.angular_bc.value)
    table.add_row("Manifest", str(settings.manifest_path or "packaged"))
    table.add_row("Output Dir", str(settings.output_dir))

    console.print(table)

    try:
        catalog = load_manifest(settings.manifest_path)
        console.print(f"\n[green]✓[/green] Manifest loaded with {len(catalog.all())} systems")
    except OPERATIONAL_ERRORS as e:
        console.print(f"\n[red]✗[/red] {e}")


if __name__ == "__main__":
    app()
