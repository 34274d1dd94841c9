"""Closed-form spectra, admissibility rules and analytic eigenfunctions.

Printed eigenvalue formulas are turned into ClaimedLevel records that carry
their convention. `adjudicate` converts each claim once into the raw eigenvalue
units of the operator that was solved numerically and records a verdict.
Closed-form eigenfunctions are adjudicated by the residual of the discretized
operator across nested grids (`adjudicate_residual`).
"""
import logging
import math
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import integrate, special

from ..config.schemas import (
    ClaimedLevel,
    ClaimReport,
    Convention,
    LevelComparison,
    QuantumNumbers,
    ResidualReport,
    ValidatedParams,
    Verdict,
)
from ..config.settings import settings
from . import specfun
from .catalog import SystemSpec
from .errors import ContractError, DomainError, UnsupportedError
from .separation import SLProblem, morse_problem, radial_problem, reduce, solver_forms
from .sturm import discretize, operator_residual, rayleigh

logger = logging.getLogger(__name__)

Sampler = Callable[[np.ndarray], np.ndarray]


class ClosedForm(BaseModel):
    """An analytic solution of one reduced problem, sampled in its coordinate."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    system: int
    formula: str
    hypothesis: str = "printed"
    qn: Dict[str, float] = Field(default_factory=dict)
    variable: str
    sampler: Sampler
    eigenvalue: Optional[float] = None  # raw eigenvalue of the reduced problem; None when complex
    imag: float = 0.0
    weight: str = ""

    def __call__(self, x: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            return np.asarray(self.sampler(np.asarray(x, dtype=float)), dtype=float)


class BesselIndex(BaseModel):
    """Printed and alternative Bessel indices of the cylindrical radial equation."""
    kappa_ang: int
    e_tilde: float
    printed_alpha: float  # α = κ² + 1 − Ẽ, order of J
    printed_normalizable: bool  # the printed rule α ≤ 0
    alternative_order: float  # |κ² + 1 − Ẽ|^{1/2}, order of K
    alternative_imaginary: bool  # K_{iν} with ν = √(Ẽ − κ² − 1)
    continuum: bool


# Claimed levels


def so4_energy(n: int) -> ClaimedLevel:
    """E = 4n² + 5 printed for Hψ = 2Eψ; admissible iff some l ≤ n − 1 exists."""
    if n < 0:
        raise DomainError(f"so4_energy needs n >= 0, got {n}")
    admissible = n >= 1
    return ClaimedLevel(
        system=1, qn={"n": n}, value=4.0 * n**2 + 5.0, convention=Convention.TWO_E,
        formula="ev2", admissible=admissible, rule=None if admissible else "l <= n-1 needs n >= 1",
    )


def so4_re_level(n: int) -> ClaimedLevel:
    """Right side 4n² + 1 of the radial equation, read as an eigenvalue of 2H."""
    if n < 1:
        raise DomainError(f"so4_re_level needs n >= 1, got {n}")
    return ClaimedLevel(
        system=1, qn={"n": n}, value=4.0 * n**2 + 1.0, convention=Convention.TWO_H,
        formula="re", note="radial operator of the printed equation equals 2H - 4",
    )


def so4_derived_energy(n: int) -> ClaimedLevel:
    """E_H = 2n² + 5/2 from the Pöschl–Teller form of the radial problem."""
    if n < 1:
        raise DomainError(f"so4_derived_energy needs n >= 1, got {n}")
    return ClaimedLevel(
        system=1, qn={"n": n}, value=2.0 * n**2 + 2.5, convention=Convention.E,
        formula="so4-derived", hypothesis="derived",
    )


def so13_energy(series: str, param: float) -> ClaimedLevel:
    """E = −5 ∓ param² on the subsidiary (j₁ = param) or principal (j₁ = iλ) series."""
    if series == "subsidiary":
        if not 0.0 <= param <= 1.0:
            raise DomainError(f"Subsidiary series needs 0 <= j1 <= 1, got {param}")
        value = -5.0 - param**2
    elif series == "principal":
        value = -5.0 + param**2
    else:
        raise DomainError(f"Unknown series '{series}'")
    return ClaimedLevel(
        system=2, qn={"j1" if series == "subsidiary" else "lam": param}, value=value,
        convention=Convention.TWO_H, formula="EE", note=f"{series} series",
    )


def so13_relation_energy(k: float) -> ClaimedLevel:
    """Ẽ = −5 − 4k² from the exponent relation of the second-kind solution."""
    return ClaimedLevel(
        system=2, qn={"k": k}, value=-5.0 - 4.0 * k**2, convention=Convention.TWO_H,
        formula="soll1",
    )


def oscillator_condition(sigma: float, kappa: float) -> bool:
    """2κ = −(σ² + 3σ + 2)."""
    return math.isclose(2 * kappa, -(sigma**2 + 3 * sigma + 2), abs_tol=1e-12)


def deformed_osc_energy(
    n: int, l: int, sigma: float, omega: float, kappa: float
) -> Tuple[ClaimedLevel, ClaimedLevel]:
    """Both printed spectra of the deformed oscillator.

    Returns:
        (eg6, spect). eg6 is admissible only under the oscillator condition;
        a negative radicand in spect gives a complex claim, not an exception.
    """
    if n < 0 or l < 0:
        raise DomainError("deformed_osc_energy needs n, l >= 0")
    if omega <= 0 or sigma == 0:
        raise DomainError("deformed_osc_energy needs omega > 0 and sigma != 0")
    qn = {"n": n, "l": l}
    holds = oscillator_condition(sigma, kappa)
    eg6 = ClaimedLevel(
        system=11, qn=qn, value=omega * (2 * n * sigma + l + sigma + 0.5), convention=Convention.E,
        formula="eg6", admissible=holds,
        rule=None if holds else "valid only when 2*kappa = -(sigma**2 + 3*sigma + 2)",
        note="oscillator condition holds; eg6 and spect should coincide" if holds else None,
    )
    kappa_tilde = 8 * (kappa + 1) + sigma * (sigma + 3)
    radicand = (2 * l + 1) ** 2 + kappa_tilde
    real = 0.5 * omega * sigma * (2 * n + 1)
    if radicand >= 0:
        spect = ClaimedLevel(
            system=11, qn=qn, value=real + 0.5 * omega * math.sqrt(radicand),
            convention=Convention.E, formula="spect",
        )
    else:
        logger.warning(f"spect radicand {radicand:g} < 0 at n={n}, l={l}: claim is complex here")
        spect = ClaimedLevel(
            system=11, qn=qn, value=None, imag=0.5 * omega * math.sqrt(-radicand),
            convention=Convention.E, formula="spect",
            note=f"complex: claim inconsistent here (real part {real:.17g})",
        )
    return eg6, spect


def deformed_osc_corrected(n: int, l: int, sigma: float, omega: float, kappa: float) -> ClaimedLevel:
    """E = |σ|ω(2n+1) + (ω/2)√((2l+1)² + 8(κ+1) + 4σ(σ+3)) from the oscillator form in z."""
    radicand = (2 * l + 1) ** 2 + 8 * (kappa + 1) + 4 * sigma * (sigma + 3)
    qn = {"n": n, "l": l}
    if radicand < 0:
        return ClaimedLevel(
            system=11, qn=qn, value=None, imag=0.5 * omega * math.sqrt(-radicand),
            convention=Convention.E, formula="osc-corrected", hypothesis="derived",
            admissible=False, rule="centrifugal term below the fall-to-centre bound",
        )
    return ClaimedLevel(
        system=11, qn=qn, value=abs(sigma) * omega * (2 * n + 1) + 0.5 * omega * math.sqrt(radicand),
        convention=Convention.E, formula="osc-corrected", hypothesis="derived",
    )


def formula_consistency(
    sigma: float, omega: float, kappa: float, n_max: int = 3, l_max: int = 3
) -> List[Dict[str, Optional[float]]]:
    """|eg6 − spect| over an (n, l) grid; None where spect is complex."""
    rows: List[Dict[str, Optional[float]]] = []
    for n in range(n_max + 1):
        for l in range(l_max + 1):
            eg6, spect = deformed_osc_energy(n, l, sigma, omega, kappa)
            gap = None if spect.value is None else abs(eg6.value - spect.value)
            rows.append({"n": n, "l": l, "eg6": eg6.value, "spect": spect.value, "difference": gap})
    return rows


def morse_energy(n: int, nu: float, sigma: float) -> ClaimedLevel:
    """ε̂ = −(ν − nσ)²; a bound state only while ν − nσ > 0."""
    if n < 0 or sigma <= 0:
        raise DomainError("morse_energy needs n >= 0 and sigma > 0")
    admissible = nu - n * sigma > 0
    return ClaimedLevel(
        system=11, qn={"n": n}, value=-((nu - n * sigma) ** 2), convention=Convention.EPS_HAT,
        formula="morse", admissible=admissible,
        rule=None if admissible else "nu - n*sigma <= 0: not normalizable",
    )


def morse_bound_count(nu: float, sigma: float) -> int:
    """Number of n ≥ 0 with ν − nσ > 0."""
    if nu <= 0:
        return 0
    return int(math.ceil(nu / sigma))


def log_osc_energy(n: int, l: int, lam: float, nu: float) -> List[ClaimedLevel]:
    """Printed, completed-square and derived levels of the logarithmic oscillator.

    Returns:
        [printed Ẽ = n + l(l+1), completed-square alternative, derived E]
    """
    if lam == 0:
        raise UnsupportedError("lam = 0 is the free-fall case: numeric spectrum only, no closed form")
    lsq = l * (l + 1)
    a = abs(lam)
    tail = nu**2 / (2 * lam**2)
    qn = {"n": n, "l": l}
    return [
        ClaimedLevel(system=10, qn=qn, value=float(n + lsq), convention=Convention.E_TILDE_QUARTER,
                     formula="ree"),
        ClaimedLevel(system=10, qn=qn, value=a / math.sqrt(2) * (2 * n + 1) - tail + lsq,
                     convention=Convention.E_TILDE_QUARTER, formula="ree-square", hypothesis="alternative"),
        ClaimedLevel(system=10, qn=qn, value=a * (n + 0.5) + 9 / 8 + lsq / 2 - tail,
                     convention=Convention.E, formula="ree-derived", hypothesis="derived"),
    ]


def bessel_level_index(kappa_ang: int, e_tilde: float) -> BesselIndex:
    """Printed J index α = κ² + 1 − Ẽ next to the modified-Bessel alternative."""
    alpha = kappa_ang**2 + 1 - e_tilde
    return BesselIndex(
        kappa_ang=kappa_ang, e_tilde=e_tilde, printed_alpha=alpha, printed_normalizable=alpha <= 0,
        alternative_order=math.sqrt(abs(alpha)), alternative_imaginary=alpha < 0,
        continuum=e_tilde >= kappa_ang**2 + 1,
    )


# Eigenfunctions


def _param(params: Mapping[str, complex], name: str) -> float:
    value = complex(params.get(name, 0.0))
    if value.imag != 0:
        raise UnsupportedError(f"Closed forms need real {name}")
    return value.real


def _sample_r(fn: Callable[[np.ndarray], np.ndarray]) -> Sampler:
    def sampled(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError("Sampler is defined for positive coordinates only")
        return fn(x)

    return sampled


def build_eigenfunction(
    system: int,
    qn: QuantumNumbers,
    params: Mapping[str, complex],
    level: float,
    variant: str = "printed",
) -> ClosedForm:
    """Analytic solution of a reduced problem in the coordinate of `reduce`.

    Args:
        system: System id
        qn: Separation constants (l for spherical systems, energy where it is a coupling)
        params: Parameter values
        level: Principal number n, or the real exponent k for system 2
        variant: "printed" or "corrected" where both exist

    Returns:
        ClosedForm with the raw eigenvalue of the reduced problem
    """
    l = qn.l or 0
    lsq = l * (l + 1)
    if system == 1:
        n = int(level)
        if n < l + 1:
            raise DomainError(f"Eigenfunction n={n} needs l <= n-1 (l={l})")
        a, b, c = -n + l + 1, -n + 0.5, l + 1.5

        def fn(r: np.ndarray) -> np.ndarray:
            return (r**2 + 1) ** (-n - 0.5) * r ** (l + 1) * specfun.hyp2f1_terminating(a, b, c, -(r**2))

        return ClosedForm(system=1, formula="soll", qn={"n": n, "l": l}, variable="r",
                          sampler=_sample_r(fn), eigenvalue=2.0 * n**2 + 2.5, weight="psi = phi(r) Y_lm / r")

    if system == 2:
        k = float(level)
        if k <= 0:
            raise DomainError("System 2 eigenfunction needs k > 0")
        a, b, c = -k + l + 1, -k + 0.5, l + 1.5

        def fn(r: np.ndarray) -> np.ndarray:
            if np.any(r >= 1):
                raise DomainError("System 2 lives on r < 1")
            return (1 - r**2) ** (-0.5 - k) * r ** (l + 1) * specfun.hyp2f1(a, b, c, r**2)

        return ClosedForm(system=2, formula="soll1", qn={"k": k, "l": l}, variable="r",
                          sampler=_sample_r(fn), eigenvalue=-2.5 - 2 * k**2,
                          weight="psi = phi(r) Y_lm / r, r < 1; second-kind branch")

    if system == 3:
        if _param(params, "nu") != 0:
            raise UnsupportedError("System 3 has no closed form for nu != 0")
        k = math.hypot(qn.k1 or 0.0, qn.k2 or 0.0)
        if k == 0 or qn.energy is None:
            raise DomainError("System 3 eigenfunction needs k > 0 and the energy")
        e_tilde = 2 * qn.energy - 0.25
        if e_tilde < 0:
            raise DomainError("System 3 closed form needs 2E - 1/4 >= 0")
        order = math.sqrt(e_tilde)
        if variant == "printed":
            def fn(x: np.ndarray) -> np.ndarray:
                y = np.log(x)
                if np.any(y <= 0):
                    raise DomainError("Printed argument k ln x3 must be positive")
                return x**-0.5 * specfun.bessel_k_imag(order, k * y)
            formula = "ua-printed"
        else:
            def fn(x: np.ndarray) -> np.ndarray:
                return x**-0.5 * specfun.bessel_k_imag(order, k * x)
            formula = "ua-corrected"
        return ClosedForm(system=3, formula=formula, hypothesis=variant, qn={"k": k, "energy": qn.energy},
                          variable="x3", sampler=_sample_r(fn), eigenvalue=qn.energy,
                          weight="psi = X(x3) exp(i(k1 x1 + k2 x2))")

    if system == 8:
        if any(_param(params, name) != 0 for name in ("lam", "mu", "nu")):
            raise UnsupportedError("System 8 closed form needs lam = mu = nu = 0")
        if qn.energy is None or qn.kappa_ang is None:
            raise DomainError("System 8 eigenfunction needs the energy and kappa_ang")
        k = abs(qn.omega_ax if qn.omega_ax is not None else 1.0)
        if k == 0:
            raise DomainError("System 8 closed form needs omega_ax != 0")
        e_tilde = 2 * qn.energy
        index = bessel_level_index(qn.kappa_ang, e_tilde)
        eps = e_tilde - qn.kappa_ang**2
        if variant == "printed":
            def fn(r: np.ndarray) -> np.ndarray:
                return specfun.bessel_j(index.printed_alpha, k * r) / r
            formula = "soso"
        else:
            if not index.alternative_imaginary:
                raise DomainError("Modified-Bessel solution needs 2E > kappa_ang**2 + 1")

            def fn(r: np.ndarray) -> np.ndarray:
                return specfun.bessel_k_imag(index.alternative_order, k * r) / r
            formula = "soso-K"
        return ClosedForm(system=8, formula=formula, hypothesis=variant,
                          qn={"kappa_ang": qn.kappa_ang, "omega_ax": k, "energy": qn.energy},
                          variable="rt", sampler=_sample_r(fn), eigenvalue=eps,
                          weight="psi = R(rt) Phi(phi) exp(i k x3), eigenvalue 2E - Lambda")

    if system == 10:
        lam = _param(params, "lam")
        nu = _param(params, "nu")
        if lam == 0:
            raise UnsupportedError("lam = 0 is the free-fall case: numeric spectrum only")
        n = int(level)
        a = abs(lam) / 2
        centre = -math.sqrt(2) * nu / lam**2

        def fn(r: np.ndarray) -> np.ndarray:
            t = math.sqrt(a) * (math.sqrt(2) * np.log(r) - centre)
            return special.eval_hermite(n, t) * np.exp(-(t**2) / 2) / np.sqrt(r)

        energy = log_osc_energy(n, l, lam, nu)[2].value
        return ClosedForm(system=10, formula="ree-derived", hypothesis="derived", qn={"n": n, "l": l},
                          variable="r", sampler=_sample_r(fn), eigenvalue=energy,
                          weight="psi = phi(r) Y_lm / r; Hermite in y = sqrt(2) ln r")

    if system == 11:
        sigma = _param(params, "sigma")
        omega = abs(_param(params, "omega"))
        kappa = _param(params, "kappa")
        n = int(level)
        if variant == "printed":
            return _confluent_eigenfunction(n, l, sigma, omega, kappa)
        claim = deformed_osc_corrected(n, l, sigma, omega, kappa)
        if not claim.admissible:
            raise DomainError(f"No bound state: {claim.rule}")
        big = omega / abs(sigma)
        s = 0.5 + math.sqrt(0.25 + (lsq + 0.75 * (sigma + 1) * (sigma + 3) + 2 * kappa) / sigma**2)

        def fn(r: np.ndarray) -> np.ndarray:
            z = r ** (-sigma)
            v = z**s * np.exp(-big * z**2 / 2) * specfun.laguerre(n, s - 0.5, big * z**2)
            return z ** ((sigma + 1) / (2 * sigma)) * v

        return ClosedForm(system=11, formula="osc-corrected", hypothesis="derived", qn={"n": n, "l": l},
                          variable="r", sampler=_sample_r(fn), eigenvalue=claim.value,
                          weight="psi = phi(r) Y_lm / r; Laguerre in z = r^(-sigma)")

    raise UnsupportedError(f"No closed-form eigenfunction for system {system}")


def _confluent_eigenfunction(n: int, l: int, sigma: float, omega: float, kappa: float) -> ClosedForm:
    """Printed confluent form R_n = e^{−ωr^σ/(2σ)} r^{σn − E/ω} ₁F₁(−n; E/(σω) − n; (ω/σ) r^{−σ})."""
    _, spect = deformed_osc_energy(n, l, sigma, omega, kappa)
    qn = {"n": n, "l": l}
    if spect.value is None:
        return ClosedForm(system=11, formula="confluent", qn=qn, variable="r",
                          sampler=lambda r: np.full_like(r, np.nan), eigenvalue=None, imag=spect.imag,
                          weight="printed energy is complex here")
    energy = spect.value
    b = energy / (sigma * omega) - n

    def fn(r: np.ndarray) -> np.ndarray:
        radial = (
            np.exp(-omega * r**sigma / (2 * sigma))
            * r ** (sigma * n - energy / omega)
            * specfun.kummer_terminating(-n, b, omega / sigma * r ** (-sigma))
        )
        return r * radial

    return ClosedForm(system=11, formula="confluent", qn=qn, variable="r", sampler=_sample_r(fn),
                      eigenvalue=energy, weight="psi = R(r) Y_lm, phi = r R")


def morse_eigenfunction(n: int, nu: float, sigma: float, omega: float) -> ClosedForm:
    """y^{ν/σ−n} e^{−y/2} L_n^{2(ν/σ−n)}(y) with y = (2|ω|/σ) e^{−σρ}."""
    claim = morse_energy(n, nu, sigma)
    if not claim.admissible:
        logger.warning(f"Sampling inadmissible Morse level n={n}: {claim.rule}")
    s = nu / sigma - n
    scale = 2 * abs(omega) / sigma

    def fn(rho: np.ndarray) -> np.ndarray:
        y = scale * np.exp(-sigma * rho)
        return y**s * np.exp(-y / 2) * specfun.laguerre(n, 2 * s, y)

    return ClosedForm(system=11, formula="morse", qn={"n": n}, variable="rho", sampler=fn,
                      eigenvalue=claim.value, weight="coupling-constant problem in rho = ln r")


def normalization(form: ClosedForm, lo: float, hi: float) -> float:
    """(∫ |u|² dx)^{1/2} over [lo, hi] by adaptive quadrature."""
    value, error = integrate.quad(lambda x: float(form(np.array([x]))[0]) ** 2, lo, hi, limit=200)
    logger.debug(f"{form.formula}: norm² {value:.6g} ± {error:.2g}")
    if value <= 0 or not math.isfinite(value):
        raise DomainError(f"{form.formula}: zero or divergent norm on [{lo}, {hi}]")
    return math.sqrt(value)


def normalized(form: ClosedForm, lo: float, hi: float) -> ClosedForm:
    """The same closed form scaled to unit norm on [lo, hi]."""
    scale = normalization(form, lo, hi)
    sampler = form.sampler
    return form.model_copy(update={"sampler": lambda x: sampler(x) / scale})


# Adjudication


def to_raw(claim: ClaimedLevel, problem: Optional[SLProblem]) -> Optional[float]:
    """Claimed value in the eigenvalue units of `problem`."""
    if claim.value is None:
        return None
    if not claim.convention.is_energy:
        return claim.value
    energy = claim.convention.to_energy(claim.value)
    if problem is None or problem.eigen_scale is None:
        return energy
    return problem.eigen_scale * energy + problem.eigen_shift


def adjudicate(
    claims: Sequence[ClaimedLevel],
    oracle: Sequence[Optional[float]],
    problem: Optional[SLProblem] = None,
    tol: Optional[float] = None,
) -> ClaimReport:
    """Compare one formula's levels with numerically computed eigenvalues.

    Args:
        claims: Levels of a single formula, aligned with `oracle` by level index
        oracle: Eigenvalues of `problem` (None where the solve failed)
        problem: Operator the oracle eigenvalues belong to
        tol: Relative tolerance, default settings.claim_tol

    Returns:
        CONFIRMED, CONFIRMED-UP-TO-CONSTANT-SHIFT, REFUTED or UNDECIDED
    """
    if not claims:
        raise ContractError("adjudicate needs at least one claimed level")
    if len(claims) != len(oracle):
        raise ContractError(f"{len(claims)} claims against {len(oracle)} oracle levels")
    tol = settings.claim_tol if tol is None else tol
    head = claims[0]
    raw_units = problem.eigen_symbol if problem is not None else head.convention.value
    levels: List[LevelComparison] = []
    differences: List[float] = []
    scales: List[float] = []
    complex_found = False
    missing = False
    for index, (claim, value) in enumerate(zip(claims, oracle)):
        if claim.formula != head.formula:
            raise ContractError("adjudicate compares one formula at a time")
        claimed = to_raw(claim, problem)
        if claim.admissible and claim.value is None:
            complex_found = True
        if not claim.admissible or claimed is None or value is None:
            missing = missing or (claim.admissible and value is None)
            levels.append(LevelComparison(qn=claim.qn, index=index, claimed=claimed, oracle=value))
            continue
        diff = claimed - value
        levels.append(LevelComparison(qn=claim.qn, index=index, claimed=claimed, oracle=value, difference=diff))
        differences.append(diff)
        scales.append(max(1.0, abs(value)))

    report = dict(
        system=head.system, formula=head.formula, hypothesis=head.hypothesis,
        convention=head.convention, raw_units=raw_units, levels=levels, tolerance=tol,
    )
    if complex_found:
        logger.warning(f"{head.formula}: complex claimed values")
        return ClaimReport(**report, verdict=Verdict.REFUTED, note="claim is complex for admissible levels")
    if missing or not differences:
        return ClaimReport(**report, verdict=Verdict.UNDECIDED, note="no oracle value for the claimed levels")

    bound = tol * max(scales)
    ratios = [lv.claimed / lv.oracle for lv in levels if lv.difference is not None and lv.oracle]
    ratio = ratios[0] if ratios and max(ratios) - min(ratios) <= tol * abs(ratios[0]) else None
    if all(abs(d) <= tol * s for d, s in zip(differences, scales)):
        verdict, shift = Verdict.CONFIRMED, None
    elif len(differences) >= 2 and max(differences) - min(differences) <= bound:
        verdict, shift = Verdict.SHIFTED, float(np.mean(differences))
    else:
        verdict, shift = Verdict.REFUTED, None
    logger.info(f"System {head.system} {head.formula} ({head.hypothesis}): {verdict.value}")
    return ClaimReport(**report, verdict=verdict, shift=shift, ratio=ratio)


def residual_sizes() -> List[int]:
    """Three nested sizes starting at the profile's 1D size."""
    n = settings.grid_profile.start_size
    return [n, 2 * n + 1, 4 * n + 3]


def residual_report(
    problem: SLProblem,
    sampler: Sampler,
    eigenvalue: Optional[float],
    window: Tuple[float, float],
    sizes: Optional[Sequence[int]] = None,
    tol: float = 1e-4,
) -> ResidualReport:
    """Operator residual of a sampled closed form on nested grids.

    With eigenvalue None the Rayleigh quotient of each sample is used.
    """
    truncated = problem.truncate(*window)
    spacings: List[float] = []
    residuals: List[float] = []
    values: List[float] = []
    for n in sizes or residual_sizes():
        d = discretize(truncated, n)
        with np.errstate(all="ignore"):
            u = np.asarray(sampler(d.nodes), dtype=float)
        if not np.all(np.isfinite(u)):
            raise DomainError(f"{problem.label}: closed form is not finite on the window")
        lam = rayleigh(d, u).value if eigenvalue is None else eigenvalue
        values.append(lam)
        spacings.append(d.h)
        residuals.append(operator_residual(d, u, lam))
    scale = max(1.0, abs(values[-1]))
    return ResidualReport.from_residuals(
        identity=f"closed form on {problem.label}", spacings=spacings, residuals=residuals,
        tolerance=tol * scale, min_order=settings.min_order, floor=settings.residual_floor,
    )


def adjudicate_residual(
    forms: Sequence[ClosedForm],
    problem: SLProblem,
    window: Tuple[float, float],
    convention: Convention,
    tol: float = 1e-4,
    sizes: Optional[Sequence[int]] = None,
) -> ClaimReport:
    """Closed forms without a discrete oracle: CONFIRMED iff every residual decays.

    Each sampler must already be in the variable of `problem`.
    """
    if not forms:
        raise ContractError("adjudicate_residual needs at least one closed form")
    head = forms[0]
    base = dict(
        system=head.system, formula=head.formula, hypothesis=head.hypothesis, convention=convention,
        raw_units=problem.eigen_symbol, tolerance=tol,
    )
    levels: List[LevelComparison] = []
    residuals: List[float] = []
    failed = False
    for index, form in enumerate(forms):
        if form.eigenvalue is None:
            logger.warning(f"{form.formula}: complex eigenvalue, residual not computed")
            return ClaimReport(**base, levels=levels, verdict=Verdict.REFUTED,
                               note="claimed eigenvalue is complex here")
        try:
            report = residual_report(problem, form.sampler, form.eigenvalue, window, sizes, tol)
        except DomainError as e:
            logger.warning(f"{form.formula}: {e}")
            return ClaimReport(**base, levels=levels, verdict=Verdict.UNDECIDED, note=str(e))
        levels.append(LevelComparison(qn=form.qn, index=index, claimed=form.eigenvalue))
        residuals.append(report.residuals[-1])
        logger.debug(f"{form.formula} {form.qn}: residuals {report.residuals}, order {report.order}")
        failed = failed or not report.passed
    verdict = Verdict.REFUTED if failed else Verdict.CONFIRMED
    logger.info(f"System {head.system} {head.formula} ({head.hypothesis}): {verdict.value}")
    return ClaimReport(**base, levels=levels, residuals=residuals, verdict=verdict)


# Claims per system


def level_claims(
    spec: SystemSpec, validated: ValidatedParams, qn: QuantumNumbers, count: int
) -> List[List[ClaimedLevel]]:
    """Printed and derived levels aligned with the lowest `count` levels of the solver form.

    Returns:
        One list per formula; empty when the system has no discrete closed form
    """
    values = validated.values()
    l = qn.l or 0
    if count <= 0:
        return []
    if spec.id == 1:
        ns = [l + 1 + k for k in range(count)]
        return [[so4_energy(n) for n in ns], [so4_re_level(n) for n in ns], [so4_derived_energy(n) for n in ns]]
    if spec.id == 10:
        lam, nu = _param(values, "lam"), _param(values, "nu")
        if lam == 0:
            return []
        rows = [log_osc_energy(k, l, lam, nu) for k in range(count)]
        return [[row[i] for row in rows] for i in range(3)]
    if spec.id == 11:
        sigma, omega, kappa = _param(values, "sigma"), abs(_param(values, "omega")), _param(values, "kappa")
        pairs = [deformed_osc_energy(k, l, sigma, omega, kappa) for k in range(count)]
        return [
            [p[0] for p in pairs],
            [p[1] for p in pairs],
            [deformed_osc_corrected(k, l, sigma, omega, kappa) for k in range(count)],
        ]
    return []


DEFAULT_COUPLING_ENERGY = 1.5


def closed_form_claims(
    spec: SystemSpec, validated: ValidatedParams, qn: QuantumNumbers, count: int = 3
) -> List[ClaimReport]:
    """Residual adjudication of every closed-form eigenfunction available for the system."""
    values = validated.values()
    l = qn.l or 0
    reports: List[ClaimReport] = []
    if spec.id == 1:
        problem = radial_problem(spec, values, l)
        forms = [build_eigenfunction(1, qn, values, l + 1 + k) for k in range(count)]
        reports.append(adjudicate_residual(forms, problem, (0.02, 8.0), Convention.E))
    elif spec.id == 2:
        problem = radial_problem(spec, values, l)
        ks = [0.5 * (j + 1) for j in range(count)]
        # eigenvalues from the exponent relation Ẽ = −5 − 4k²
        forms = [
            build_eigenfunction(2, qn, values, k).model_copy(
                update={"eigenvalue": to_raw(so13_relation_energy(k), problem)}
            )
            for k in ks
        ]
        reports.append(adjudicate_residual(forms, problem, (0.05, 0.8), Convention.TWO_H))
        # The printed E = −5 − j₁² with k = j₁ on the subsidiary range
        printed = []
        for k in (j for j in ks if j <= 1.0):
            form = build_eigenfunction(2, qn, values, k)
            claim = so13_energy("subsidiary", k)
            printed.append(form.model_copy(update={"formula": "EE", "eigenvalue": to_raw(claim, problem)}))
        if printed:
            reports.append(adjudicate_residual(printed, problem, (0.05, 0.8), Convention.TWO_H))
    elif spec.id == 3 and _param(values, "nu") == 0:
        energy = qn.energy if qn.energy is not None else DEFAULT_COUPLING_ENERGY
        local = qn.model_copy(update={"energy": energy})
        (_, problem), = solver_forms(spec, validated, local)
        centre = problem.center or 0.0
        # the printed argument k·y needs y > 0
        windows = (("printed", (max(0.3, centre - 3.0), max(0.3, centre) + 2.5)), ("corrected", (centre - 3.0, centre + 2.5)))
        for variant, window in windows:
            form = build_eigenfunction(3, local, values, 0, variant)
            pulled = form.model_copy(update={"sampler": problem.pull(form.sampler), "eigenvalue": 2 * energy - 0.25})
            reports.append(adjudicate_residual([pulled], problem, window, Convention.E_TILDE_SCALE))
    elif spec.id == 8 and all(_param(values, p) == 0 for p in ("lam", "mu", "nu")):
        energy = qn.energy if qn.energy is not None else DEFAULT_COUPLING_ENERGY
        kappa_ang = qn.kappa_ang if qn.kappa_ang is not None else 0
        local = qn.model_copy(update={"energy": energy, "kappa_ang": kappa_ang})
        problem = dict(reduce(spec, validated, local))["radial"]
        for variant in ("printed", "corrected"):
            try:
                form = build_eigenfunction(8, local, values, 0, variant)
            except DomainError as e:
                logger.warning(f"System 8 {variant}: {e}")
                continue
            reports.append(adjudicate_residual([form], problem, (0.5, 6.0), Convention.TWO_E))
    elif spec.id == 10 and _param(values, "lam") != 0:
        problem = radial_problem(spec, values, l)
        lam, nu = _param(values, "lam"), _param(values, "nu")
        centre = math.exp((-math.sqrt(2) * nu / lam**2) / math.sqrt(2))
        spread = math.exp(6.0 / math.sqrt(abs(lam)))
        forms = [build_eigenfunction(10, qn, values, k) for k in range(count)]
        reports.append(adjudicate_residual(forms, problem, (centre / spread, centre * spread), Convention.E))
    elif spec.id == 11:
        problem = radial_problem(spec, values, l)
        for variant in ("corrected", "printed"):
            try:
                forms = [build_eigenfunction(11, qn, values, k, variant) for k in range(count)]
            except (DomainError, UnsupportedError) as e:
                logger.warning(f"System 11 {variant} eigenfunctions: {e}")
                continue
            reports.append(adjudicate_residual(forms, problem, (0.3, 4.0), Convention.E))
    return reports


def morse_claims(nu: float, sigma: float, omega: float, oracle: Sequence[Optional[float]]) -> List[ClaimReport]:
    """Morse spectrum and eigenvector adjudication on the stand-alone Morse problem."""
    problem = morse_problem(nu, sigma, omega)
    claims = [morse_energy(n, nu, sigma) for n in range(len(oracle))]
    reports = [adjudicate(claims, oracle, problem)]
    bound = [n for n in range(len(oracle)) if claims[n].admissible]
    if bound:
        lo, hi = problem.initial_window()
        forms = [normalized(morse_eigenfunction(n, nu, sigma, omega), lo, hi) for n in bound]
        reports.append(adjudicate_residual(forms, problem, (lo, hi), Convention.EPS_HAT))
    return reports
