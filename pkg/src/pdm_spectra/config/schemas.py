"""Data models for parameters, quantum numbers, claims, reports and run configuration."""
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .settings import settings

PARAMETER_NAMES = ("kappa", "lam", "omega", "nu", "mu", "sigma")
IMAGINARY_ALLOWED = ("lam", "omega")
PARAMETER_ALIASES = {"lambda": "lam", "k": "kappa"}

Number = Union[float, complex]


class ParameterSet(BaseModel):
    """Values of the system constants; unset entries stay None."""
    model_config = ConfigDict(frozen=True)

    kappa: Optional[float] = None
    lam: Optional[float] = None
    omega: Optional[float] = None
    nu: Optional[float] = None
    mu: Optional[float] = None
    sigma: Optional[float] = None
    imaginary: List[str] = Field(default_factory=list)  # stored value is the imaginary part

    @field_validator("imaginary")
    @classmethod
    def validate_imaginary(cls, v: List[str]) -> List[str]:
        """Only λ and ω may be imaginary."""
        for name in v:
            if name not in IMAGINARY_ALLOWED:
                raise ValueError(f"Parameter '{name}' must be real; only lam and omega may be imaginary")
        return sorted(set(v))

    def is_set(self, name: str) -> bool:
        return getattr(self, name) is not None

    def values(self) -> Dict[str, Number]:
        """Set parameters as numbers, imaginary ones as complex."""
        out: Dict[str, Number] = {}
        for name in PARAMETER_NAMES:
            value = getattr(self, name)
            if value is None:
                continue
            out[name] = complex(0.0, value) if name in self.imaginary else float(value)
        return out

    def updated(self, **changes: Any) -> "ParameterSet":
        data = self.model_dump()
        data.update(changes)
        return ParameterSet(**data)

    @classmethod
    def from_assignments(cls, items: List[str]) -> "ParameterSet":
        """Parse `name=value` strings; a trailing `i` or `j` marks an imaginary value."""
        data: Dict[str, Any] = {}
        imaginary: List[str] = []
        for item in items:
            if "=" not in item:
                raise ValueError(f"Expected name=value, got '{item}'")
            name, raw = (part.strip() for part in item.split("=", 1))
            name = PARAMETER_ALIASES.get(name, name)
            if name not in PARAMETER_NAMES:
                raise ValueError(f"Unknown parameter '{name}'")
            if raw.endswith(("i", "j")):
                imaginary.append(name)
                raw = raw[:-1] or "1"
            data[name] = float(raw)
        return cls(**data, imaginary=imaginary)


class ValidatedParams(BaseModel):
    """Parameters accepted for one system, with sub-case flags."""
    system: int
    params: ParameterSet
    flags: List[str] = Field(default_factory=list)

    def values(self) -> Dict[str, Number]:
        return self.params.values()

    def has_flag(self, flag: str) -> bool:
        return flag in self.flags


class QuantumNumbers(BaseModel):
    """Separation constants selecting one reduced problem."""
    model_config = ConfigDict(frozen=True)

    l: Optional[int] = None  # spherical
    m: Optional[int] = None
    kappa_ang: Optional[int] = None  # cylindrical angular number
    omega_ax: Optional[float] = None  # axial wavenumber
    k1: Optional[float] = None  # Cartesian wavenumbers
    k2: Optional[float] = None
    k3: Optional[float] = None
    energy: Optional[float] = None  # E, where it enters a reduction as a coupling

    @model_validator(mode="after")
    def validate_ranges(self) -> "QuantumNumbers":
        """Spherical numbers obey l ≥ 0 and |m| ≤ l."""
        if self.l is not None and self.l < 0:
            raise ValueError("l must be non-negative")
        if self.m is not None and (self.l is None or abs(self.m) > self.l):
            raise ValueError("m requires l with |m| <= l")
        return self

    def labels(self) -> Dict[str, float]:
        return {k: v for k, v in self.model_dump().items() if v is not None}

    def label(self) -> str:
        return ",".join(f"{k}={v:g}" for k, v in self.labels().items()) or "-"


class Convention(str, Enum):
    """How a printed eigenvalue relates to the Hamiltonian eigenvalue E_H (Hψ = E_H ψ)."""

    E = "E"  # value is E_H
    TWO_E = "2E"  # printed with Hψ = 2Eψ, so E_H = 2·value
    TWO_H = "2H"  # value is an eigenvalue of 2H, E_H = value/2
    E_TILDE_QUARTER = "E-1/4"  # Ẽ = E_H − ¼
    E_TILDE_SCALE = "2E-1/4"  # Ẽ = 2E_H − ¼
    EPS_HAT = "eps_hat"  # Morse eigenvalue of the coupling-constant problem
    E_HAT = "E_hat"  # angular separation constant
    INDEX = "index"  # special-function index, not an eigenvalue

    def to_energy(self, value: float) -> float:
        """Hamiltonian eigenvalue E_H for an energy-type convention."""
        if self is Convention.E:
            return value
        if self is Convention.TWO_E:
            return 2.0 * value
        if self is Convention.TWO_H:
            return value / 2.0
        if self is Convention.E_TILDE_QUARTER:
            return value + 0.25
        if self is Convention.E_TILDE_SCALE:
            return (value + 0.25) / 2.0
        raise ValueError(f"Convention {self.value} is not an energy convention")

    @property
    def is_energy(self) -> bool:
        return self not in (Convention.EPS_HAT, Convention.E_HAT, Convention.INDEX)


class Verdict(str, Enum):
    """Outcome of adjudicating a printed claim."""

    CONFIRMED = "CONFIRMED"
    SHIFTED = "CONFIRMED-UP-TO-CONSTANT-SHIFT"
    REFUTED = "REFUTED"
    UNDECIDED = "UNDECIDED"


class IdentityVerdict(str, Enum):
    """Outcome of an operator-identity residual check."""

    PASS = "PASS"
    FAIL = "FAIL"


class ClaimedLevel(BaseModel):
    """One eigenvalue as stated by a closed-form formula."""
    system: int
    qn: Dict[str, float] = Field(default_factory=dict)
    value: Optional[float] = None  # None when the formula is complex here
    imag: float = 0.0
    convention: Convention
    formula: str  # printed tag, e.g. "ev2", "eg6"
    hypothesis: str = "printed"  # printed | alternative | derived
    admissible: bool = True
    rule: Optional[str] = None  # violated admissibility rule
    note: Optional[str] = None

    @model_validator(mode="after")
    def validate_rule(self) -> "ClaimedLevel":
        """Inadmissible levels carry the violated rule."""
        if not self.admissible and not self.rule:
            raise ValueError("Inadmissible level without a rule")
        return self

    @property
    def is_complex(self) -> bool:
        return self.value is None


class LevelComparison(BaseModel):
    """Claim and oracle for one level, both in raw operator units."""
    qn: Dict[str, float] = Field(default_factory=dict)
    index: int
    claimed: Optional[float] = None
    oracle: Optional[float] = None
    difference: Optional[float] = None


class ClaimReport(BaseModel):
    """Verdict on one printed formula over a set of levels."""
    system: int
    formula: str
    hypothesis: str = "printed"
    convention: Convention
    raw_units: str  # eigenvalue symbol of the operator compared against
    levels: List[LevelComparison] = Field(default_factory=list)
    residuals: List[float] = Field(default_factory=list)  # closed-form residual adjudication
    verdict: Verdict
    shift: Optional[float] = None
    ratio: Optional[float] = None
    tolerance: float
    note: Optional[str] = None


def fit_order(spacings: List[float], residuals: List[float]) -> Optional[float]:
    """Least-squares slope of log residual against log spacing."""
    pairs = [(math.log(h), math.log(r)) for h, r in zip(spacings, residuals) if r > 0 and h > 0]
    if len(pairs) < 2:
        return None
    mean_x = sum(p[0] for p in pairs) / len(pairs)
    mean_y = sum(p[1] for p in pairs) / len(pairs)
    sxx = sum((p[0] - mean_x) ** 2 for p in pairs)
    if sxx == 0:
        return None
    return sum((p[0] - mean_x) * (p[1] - mean_y) for p in pairs) / sxx


class ResidualReport(BaseModel):
    """Residual norms of one operator identity across grid spacings."""
    identity: str
    system: Optional[int] = None
    t: float = 0.0
    spacings: List[float]
    residuals: List[float]
    order: Optional[float] = None
    tolerance: float
    min_order: float = 1.7
    floor: float = 1e-10
    verdict: IdentityVerdict
    control: bool = False  # negative control, excluded from exit codes
    on_shell: bool = False  # ∂t terms reduced with ∂tψ = −iHψ
    note: Optional[str] = None

    @model_validator(mode="after")
    def validate_data(self) -> "ResidualReport":
        """At least three spacings, one residual per spacing."""
        if len(self.spacings) < 3 or len(self.spacings) != len(self.residuals):
            raise ValueError("A residual report needs at least three spacings with residuals")
        return self

    @classmethod
    def decide(
        cls, spacings: List[float], residuals: List[float], tolerance: float,
        min_order: float, floor: float,
    ) -> Tuple[Optional[float], IdentityVerdict]:
        """Fitted order and verdict from the stored data alone."""
        order = fit_order(spacings, residuals)
        if max(residuals) <= floor:
            return order, IdentityVerdict.PASS
        finest = residuals[spacings.index(min(spacings))]
        if order is not None and order >= min_order and finest <= tolerance:
            return order, IdentityVerdict.PASS
        return order, IdentityVerdict.FAIL

    @classmethod
    def from_residuals(
        cls, identity: str, spacings: List[float], residuals: List[float], tolerance: float,
        min_order: float = 1.7, floor: float = 1e-10, **extra: Any,
    ) -> "ResidualReport":
        order, verdict = cls.decide(spacings, residuals, tolerance, min_order, floor)
        return cls(
            identity=identity, spacings=spacings, residuals=residuals, order=order,
            tolerance=tolerance, min_order=min_order, floor=floor, verdict=verdict, **extra,
        )

    @property
    def passed(self) -> bool:
        return self.verdict is IdentityVerdict.PASS


class ClosureReport(BaseModel):
    """Least-squares structure constants of a generator set."""
    system: int
    generators: List[str]
    constants: List[List[List[float]]]  # constants[i][j][k] with −i[Sᵢ,Sⱼ] ≈ Σ_k c^k Sₖ
    fit_residuals: List[List[float]]
    rank: int
    antisymmetry: float
    rank_deficient: bool = False
    spacing: float


class CasimirFit(BaseModel):
    """Best affine relation C = αH + β on a batch of fields."""
    casimir: str
    alpha: float
    beta: float
    residual: float


class PairingRow(BaseModel):
    """Partner-spectrum comparison for one level index."""
    k: int
    upper: float  # λ_{k+1} of the factorized Hamiltonian
    partner: float  # λ_k of the partner Hamiltonian
    difference: float


class SusyReport(BaseModel):
    """Factorization residuals and partner-spectrum pairing."""
    family: str  # oscillator | morse
    parameters: Dict[str, float]
    factorization: List[ResidualReport]
    pairing: List[PairingRow]
    pairing_shift: float  # mean of upper − partner
    pairing_claim: IdentityVerdict  # printed relation with zero shift
    pairing_corrected: IdentityVerdict  # relation with the derived constant shift
    expected_shift: float
    tolerance: float


class SpectrumRow(BaseModel):
    """One computed level as written to eigenvalues.csv."""
    system: int
    l_or_kappa: Optional[int] = None
    aux_qn: str = "-"  # problem label and remaining quantum numbers
    k: int
    lambda_raw: float  # eigenvalue of the solved operator
    lambda_convention: Optional[float] = None  # Hamiltonian eigenvalue E, when λ is an energy
    extrapolated: bool = False
    residual: float


class RunConfig(BaseModel):
    """One batch run: a system, its parameters and what to compute."""
    system: int
    params: ParameterSet = Field(default_factory=ParameterSet)
    qn: Dict[str, float] = Field(default_factory=dict)  # fixed non-spherical quantum numbers
    l_range: Tuple[int, int] = (0, 0)
    levels: int = 4
    grid: str = "standard"  # coarse | standard | fine | nXXX
    box: Optional[Tuple[float, float]] = None
    tol: Optional[float] = None
    bc: Optional[str] = None  # angular endpoints; None uses settings.angular_bc
    out: Path = Field(default_factory=lambda: settings.output_dir)
    formats: List[str] = Field(default_factory=lambda: ["csv", "json"])
    seed: int = 7
    controls: str = "off"
    which: List[str] = Field(default_factory=lambda: ["symmetries"])
    generators: List[str] = Field(default_factory=list)
    morse_nu: Optional[float] = None  # system 11: adjudicate the Morse form at this nu

    @field_validator("system")
    @classmethod
    def validate_system(cls, v: int) -> int:
        """Systems are numbered 1 to 11."""
        if not 1 <= v <= 11:
            raise ValueError(f"System id must be in 1..11, got {v}")
        return v

    @field_validator("l_range")
    @classmethod
    def validate_l_range(cls, v: Tuple[int, int]) -> Tuple[int, int]:
        if v[0] < 0 or v[1] < v[0]:
            raise ValueError(f"Invalid l range {v[0]}:{v[1]}")
        return v

    @field_validator("levels")
    @classmethod
    def validate_levels(cls, v: int) -> int:
        if v < 0:
            raise ValueError("levels must be non-negative")
        return v

    @field_validator("formats")
    @classmethod
    def validate_formats(cls, v: List[str]) -> List[str]:
        unknown = [f for f in v if f not in ("csv", "json")]
        if unknown:
            raise ValueError(f"Unknown output formats: {', '.join(unknown)}")
        return v

    @field_validator("bc")
    @classmethod
    def validate_bc(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and v not in ("dirichlet", "periodic"):
            raise ValueError(f"Unknown boundary condition '{v}'")
        return v

    @field_validator("controls")
    @classmethod
    def validate_controls(cls, v: str) -> str:
        if v not in ("strict", "off"):
            raise ValueError(f"--controls must be strict or off, got '{v}'")
        return v

    @field_validator("which")
    @classmethod
    def validate_which(cls, v: List[str]) -> List[str]:
        known = ("symmetries", "casimir", "closure", "susy")
        unknown = [w for w in v if w not in known]
        if unknown:
            raise ValueError(f"Unknown identity family: {', '.join(unknown)}")
        return v

    @classmethod
    def from_file(cls, path: Path, **overrides: Any) -> "RunConfig":
        """Load a YAML run file; keyword overrides win over file values."""
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise ValueError(f"Run config {path} must be a mapping")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


class GeneratorRecord(BaseModel):
    """Manifest entry of one generator."""
    name: str
    expression: Optional[str] = None  # linear combination of basic operators
    partner_of: Optional[str] = None  # defined as ∂/∂t of another generator
    note: Optional[str] = None

    @model_validator(mode="after")
    def validate_definition(self) -> "GeneratorRecord":
        """Exactly one of expression / partner_of."""
        if (self.expression is None) == (self.partner_of is None):
            raise ValueError(f"Generator {self.name} needs exactly one of expression, partner_of")
        return self


class ConstraintRecord(BaseModel):
    """Parameter restrictions of one system."""
    sigma_excluded: List[float] = Field(default_factory=list)
    forbid_all_zero: bool = False
    nonseparable_unless_zero: List[str] = Field(default_factory=list)
    scale_invariant_when_zero: List[str] = Field(default_factory=list)


class SystemRecord(BaseModel):
    """Manifest entry of one system."""
    id: int
    inverse_mass: str
    potential: str
    parameters: List[str] = Field(default_factory=list)
    separation: str
    generators: List[GeneratorRecord]
    candidates: List[GeneratorRecord] = Field(default_factory=list)
    constraints: ConstraintRecord = Field(default_factory=ConstraintRecord)
    box: List[List[float]]  # verification box, [lo, hi] per axis
    example: Dict[str, float] = Field(default_factory=dict)
    note: Optional[str] = None


class ManifestFile(BaseModel):
    """Versioned systems manifest."""
    model_config = ConfigDict(populate_by_name=True)

    version: int = Field(alias="schema")
    systems: List[SystemRecord]
