"""Catalog of the eleven PDM systems and their symmetry generators.

The systems manifest (``config/systems.yaml``) is the single source of truth.
Generators are written there as linear combinations of basic operators; this
module expands them into coefficient form ``S = c_t ∂_t + Σ c_a ∂_a + c_0``.
"""
import logging
import math
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
import yaml
from pydantic import BaseModel, ConfigDict
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from ..config.schemas import (
    ConstraintRecord,
    GeneratorRecord,
    ManifestFile,
    ParameterSet,
    SystemRecord,
    ValidatedParams,
)
from ..config.settings import settings
from .errors import DomainError
from .expr import PARAMETERS, SPACE_TIME, X1, X2, X3, T, CoefficientExpr, namespace

logger = logging.getLogger(__name__)

SYSTEM_COUNT = 11

_X = (X1, X2, X3)
_R2 = X1**2 + X2**2 + X3**2
_I = sp.I

Coefficients = Tuple[sp.Expr, sp.Expr, sp.Expr, sp.Expr, sp.Expr]  # c_t, c_1, c_2, c_3, c_0


class SeparationScheme(str, Enum):
    """Coordinates in which a system separates."""

    SPHERICAL = "spherical"
    CYLINDRICAL = "cylindrical"
    CARTESIAN_X3 = "cartesian-x3"
    CARTESIAN_X1 = "cartesian-x1"


def _combine(*terms: Tuple[sp.Expr, Coefficients]) -> Coefficients:
    out = [sp.Integer(0)] * 5
    for weight, coeffs in terms:
        for i, c in enumerate(coeffs):
            out[i] += weight * c
    return tuple(sp.expand(c) for c in out)  # type: ignore[return-value]


def _momentum(a: int) -> Coefficients:
    c = [sp.Integer(0)] * 3
    c[a] = -_I
    return (sp.Integer(0), c[0], c[1], c[2], sp.Integer(0))


def _rotation(a: int, b: int) -> Coefficients:
    # M_ab = x_a p_b − x_b p_a
    c = [sp.Integer(0)] * 3
    c[b] += -_I * _X[a]
    c[a] += _I * _X[b]
    return (sp.Integer(0), c[0], c[1], c[2], sp.Integer(0))


def _dilation() -> Coefficients:
    return (sp.Integer(0), -_I * X1, -_I * X2, -_I * X3, -3 * _I / 2)


def _conformal(a: int) -> Coefficients:
    # K_a = r² p_a − 2 x_a D
    c = [2 * _I * _X[a] * _X[b] for b in range(3)]
    c[a] -= _I * _R2
    return (sp.Integer(0), c[0], c[1], c[2], 3 * _I * _X[a])


def _basic_operators() -> Dict[str, Coefficients]:
    ops: Dict[str, Coefficients] = {
        "one": (sp.Integer(0), sp.Integer(0), sp.Integer(0), sp.Integer(0), sp.Integer(1)),
        "Pt": (_I, sp.Integer(0), sp.Integer(0), sp.Integer(0), sp.Integer(0)),
        "D": _dilation(),
    }
    half = sp.Rational(1, 2)
    for a in range(3):
        ops[f"P{a + 1}"] = _momentum(a)
        ops[f"K{a + 1}"] = _conformal(a)
        ops[f"M0{a + 1}"] = _combine((half, _conformal(a)), (half, _momentum(a)))
        ops[f"M4{a + 1}"] = _combine((half, _conformal(a)), (-half, _momentum(a)))
        for b in range(3):
            if a != b:
                ops[f"M{a + 1}{b + 1}"] = _rotation(a, b)
    ops["L1"] = ops["M23"]
    ops["L2"] = ops["M31"]
    ops["L3"] = ops["M12"]
    return ops


BASIC_OPERATORS: Dict[str, Coefficients] = _basic_operators()
_OPERATOR_SYMBOLS: Dict[str, sp.Symbol] = {name: sp.Symbol(f"op_{name}") for name in BASIC_OPERATORS}


class GeneratorSpec(BaseModel):
    """First-order operator S = c_t ∂_t + Σ c_a ∂_a + c_0 with (x, t) coefficients."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    c_t: CoefficientExpr
    c: Tuple[CoefficientExpr, CoefficientExpr, CoefficientExpr]
    c_0: CoefficientExpr
    expression: Optional[str] = None  # manifest text; None for derived generators
    partner_of: Optional[str] = None
    note: Optional[str] = None

    @classmethod
    def from_coefficients(
        cls, name: str, coeffs: Sequence[sp.Expr], **extra: Optional[str]
    ) -> "GeneratorSpec":
        c_t, c1, c2, c3, c0 = (CoefficientExpr(sp.sympify(c)) for c in coeffs)
        return cls(name=name, c_t=c_t, c=(c1, c2, c3), c_0=c0, **extra)

    @property
    def coefficients(self) -> Tuple[CoefficientExpr, ...]:
        return (self.c_t, *self.c, self.c_0)

    @property
    def is_time_dependent(self) -> bool:
        """True when any coefficient varies with t."""
        return any(c.depends_on("t") for c in self.coefficients)

    @property
    def has_time_derivative(self) -> bool:
        return not self.c_t.is_zero()

    @property
    def free_parameters(self) -> Tuple[str, ...]:
        names = {n for c in self.coefficients for n in c.free_parameters}
        return tuple(sorted(names))

    def time_derivative(self, name: Optional[str] = None) -> "GeneratorSpec":
        """∂S/∂t, taken coefficient by coefficient."""
        return GeneratorSpec.from_coefficients(
            name or f"d/dt {self.name}",
            [c.diff("t").expr for c in self.coefficients],
            partner_of=self.name,
        )

    def with_params(self, values: Dict[str, complex]) -> "GeneratorSpec":
        return self.model_copy(
            update={
                "c_t": self.c_t.with_params(values),
                "c": tuple(c.with_params(values) for c in self.c),
                "c_0": self.c_0.with_params(values),
            }
        )


class SystemSpec(BaseModel):
    """One catalogued system with its expanded generators."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    id: int
    inverse_mass: CoefficientExpr
    potential: CoefficientExpr
    parameters: Tuple[str, ...]
    separation: SeparationScheme
    generators: Tuple[GeneratorSpec, ...]
    candidates: Tuple[GeneratorSpec, ...] = ()
    extras: Tuple[GeneratorSpec, ...] = ()  # P0 = i∂t and the unit operator
    constraints: ConstraintRecord
    box: Tuple[Tuple[float, float], Tuple[float, float], Tuple[float, float]]
    example: ParameterSet
    solvable: bool  # False where separability depends on κ = 0
    note: Optional[str] = None
    record: SystemRecord

    @property
    def generator_names(self) -> List[str]:
        return [g.name for g in self.generators]

    def generator(self, name: str) -> GeneratorSpec:
        """Look up a listed, candidate or extra generator by name."""
        for g in (*self.generators, *self.candidates, *self.extras):
            if g.name == name:
                return g
        raise DomainError(f"System {self.id} has no generator '{name}'")

    def is_solvable(self, params: ParameterSet) -> bool:
        """Separable for these parameter values."""
        if self.solvable:
            return True
        kappa = params.kappa if params.kappa is not None else 0.0
        return math.isclose(kappa, 0.0, abs_tol=1e-14)


def _parse_generator(text: str) -> Coefficients:
    local = namespace(SPACE_TIME)
    local.update(_OPERATOR_SYMBOLS)
    try:
        expr = parse_expr(str(text), local_dict=local, transformations=standard_transformations)
    except (SyntaxError, TypeError, sp.SympifyError) as e:
        raise DomainError(f"Cannot parse generator '{text}': {e}") from e

    op_symbols = set(_OPERATOR_SYMBOLS.values())
    allowed = set(_X) | {T} | set(PARAMETERS.values()) | op_symbols
    unknown = expr.free_symbols - allowed
    if unknown:
        raise DomainError(f"Unknown symbols in generator '{text}': {sorted(map(str, unknown))}")

    expr = sp.expand(expr)
    out = [sp.Integer(0)] * 5
    for name, symbol in _OPERATOR_SYMBOLS.items():
        weight = sp.diff(expr, symbol)
        if weight == 0:
            continue
        if weight.free_symbols & op_symbols:
            raise DomainError(f"Generator '{text}' is not linear in the basic operators")
        for i, c in enumerate(BASIC_OPERATORS[name]):
            out[i] += weight * c
    # Operator-free terms act multiplicatively
    out[4] += expr.subs({s: 0 for s in op_symbols})
    return tuple(sp.expand(c) for c in out)  # type: ignore[return-value]


def basis_operator(name: str) -> GeneratorSpec:
    """A basic operator (P1, M12, D, K3, M41, Pt, one, ...) as a generator."""
    if name not in BASIC_OPERATORS:
        raise DomainError(f"Unknown basic operator '{name}'")
    return GeneratorSpec.from_coefficients(name, BASIC_OPERATORS[name], expression=name)


def _expand_generators(records: Iterable[GeneratorRecord], system_id: int) -> Tuple[GeneratorSpec, ...]:
    built: Dict[str, GeneratorSpec] = {}
    for record in records:
        if record.expression is not None:
            spec = GeneratorSpec.from_coefficients(
                record.name, _parse_generator(record.expression),
                expression=record.expression, note=record.note,
            )
        else:
            if record.partner_of not in built:
                raise DomainError(
                    f"System {system_id}: partner '{record.name}' precedes '{record.partner_of}'"
                )
            spec = built[record.partner_of].time_derivative(record.name)
            spec = spec.model_copy(update={"note": record.note})
        built[record.name] = spec
    return tuple(built.values())


def build_system(record: SystemRecord) -> SystemSpec:
    """Expand one manifest record."""
    if not 1 <= record.id <= SYSTEM_COUNT:
        raise DomainError(f"System id must be in 1..{SYSTEM_COUNT}, got {record.id}")
    f = CoefficientExpr.parse(record.inverse_mass)
    v = CoefficientExpr.parse(record.potential)
    for name, expr in (("inverse mass", f), ("potential", v)):
        if expr.depends_on("t"):
            raise DomainError(f"System {record.id}: {name} must not depend on t")
    if len(record.box) != 3 or any(len(b) != 2 or b[0] >= b[1] for b in record.box):
        raise DomainError(f"System {record.id}: box needs three increasing [lo, hi] pairs")

    generators = _expand_generators(record.generators, record.id)
    # Candidates may refer to listed generators as partners
    candidates = _expand_generators([*record.generators, *record.candidates], record.id)
    candidates = tuple(c for c in candidates if c.name in {r.name for r in record.candidates})

    return SystemSpec(
        id=record.id,
        inverse_mass=f,
        potential=v,
        parameters=tuple(record.parameters),
        separation=SeparationScheme(record.separation),
        generators=generators,
        candidates=candidates,
        extras=(basis_operator("Pt"), basis_operator("one")),
        constraints=record.constraints,
        box=tuple(tuple(b) for b in record.box),  # type: ignore[arg-type]
        example=ParameterSet(**record.example),
        solvable=not record.constraints.nonseparable_unless_zero,
        note=record.note,
        record=record,
    )


class Catalog:
    """Immutable collection of system specs built from a manifest."""

    def __init__(self, manifest: ManifestFile):
        """Initialize catalog.

        Args:
            manifest: Parsed systems manifest
        """
        self.manifest = manifest
        specs = [build_system(r) for r in manifest.systems]
        ids = [s.id for s in specs]
        if sorted(ids) != list(range(1, SYSTEM_COUNT + 1)):
            raise DomainError(f"Manifest must define systems 1..{SYSTEM_COUNT} once each, got {ids}")
        self._specs: Dict[int, SystemSpec] = {s.id: s for s in specs}
        logger.info(f"Catalog built with {len(specs)} systems (schema {manifest.version})")

    def get(self, system_id: int) -> SystemSpec:
        if system_id not in self._specs:
            raise DomainError(f"Unknown system id {system_id}; expected 1..{SYSTEM_COUNT}")
        return self._specs[system_id]

    def all(self) -> List[SystemSpec]:
        return [self._specs[i] for i in sorted(self._specs)]


def _packaged_manifest() -> str:
    return resources.files("pdm_spectra.config").joinpath("systems.yaml").read_text(encoding="utf-8")


def load_manifest(path: Optional[Path] = None) -> Catalog:
    """Load a manifest file; the packaged manifest when no path is given."""
    if path is None:
        text = _packaged_manifest()
        logger.debug("Loading packaged systems manifest")
    else:
        if not Path(path).exists():
            raise DomainError(f"Manifest not found: {path}")
        text = Path(path).read_text(encoding="utf-8")
        logger.debug(f"Loading systems manifest from {path}")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise DomainError(f"Invalid manifest YAML: {e}") from e
    return Catalog(ManifestFile.model_validate(data))


def dump_manifest(catalog: Catalog, path: Path) -> None:
    """Write a catalog back to the manifest format."""
    data = catalog.manifest.model_dump(by_alias=True, exclude_none=True)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(data, f, sort_keys=False, allow_unicode=True)
    logger.info(f"Manifest written to {path}")


@lru_cache(maxsize=None)
def default_catalog() -> Catalog:
    """Catalog from the configured manifest, built once per process."""
    return load_manifest(settings.manifest_path)


def get_system(system_id: int) -> SystemSpec:
    """Spec of one catalogued system."""
    return default_catalog().get(system_id)


def list_systems() -> List[SystemSpec]:
    return default_catalog().all()


def candidates(system_id: int) -> Tuple[GeneratorSpec, ...]:
    """Alternative readings of printed generators for a system."""
    return get_system(system_id).candidates


def validate_params(spec: SystemSpec, params: ParameterSet) -> ValidatedParams:
    """Check parameters against the row's constraints and mark sub-cases.

    Args:
        spec: System spec
        params: Parameter values

    Returns:
        Normalized parameters with sub-case flags
    """
    missing = [p for p in spec.parameters if not params.is_set(p)]
    if missing:
        raise DomainError(f"System {spec.id} needs parameters: {', '.join(missing)}")

    relevant = {p: params.values()[p] for p in spec.parameters}
    extra = [p for p in params.values() if p not in spec.parameters]
    if extra:
        logger.debug(f"System {spec.id} ignores parameters {extra}")

    constraints = spec.constraints
    sigma = params.sigma
    if "sigma" in spec.parameters and sigma is not None:
        for excluded in constraints.sigma_excluded:
            if math.isclose(sigma, excluded, abs_tol=1e-12):
                raise DomainError(f"System {spec.id} requires sigma not in {constraints.sigma_excluded}")

    if constraints.forbid_all_zero and relevant and all(abs(v) == 0 for v in relevant.values()):
        raise DomainError(f"System {spec.id}: parameters must not all be zero")

    # Mass and potential must stay real at the box centre
    centre = [np.asarray((lo + hi) / 2) for lo, hi in spec.box] + [np.asarray(0.0)]
    for what, expr in (("inverse mass", spec.inverse_mass), ("potential", spec.potential)):
        expr.evaluate_real(*centre, params=relevant, what=f"System {spec.id} {what}")

    flags: List[str] = []
    zero_names = constraints.scale_invariant_when_zero
    if zero_names and all(abs(relevant.get(n, 0.0)) == 0 for n in zero_names):
        flags.append("scale-invariant")
    if not spec.is_solvable(params):
        flags.append("non-separable")
    if params.imaginary:
        flags.append("imaginary:" + ",".join(params.imaginary))
    if spec.id == 7 and sigma is not None and params.lam is not None and sigma * params.lam != 0:
        flags.append("non-separable")
    if spec.id == 10 and params.lam == 0:
        flags.append("free-fall")
    if spec.id == 11 and params.kappa is not None and sigma is not None:
        if math.isclose(2 * params.kappa, -(sigma**2 + 3 * sigma + 2), abs_tol=1e-12):
            flags.append("oscillator-condition")

    return ValidatedParams(system=spec.id, params=params, flags=sorted(set(flags)))


def perturb(generator: GeneratorSpec, relative: float = 0.01) -> GeneratorSpec:
    """Negative control: change one term of a generator by a relative amount.

    The first non-zero spatial coefficient is scaled by ``1 + relative``. A
    generator with a single spatial term would stay a symmetry under scaling,
    so it gets ``relative · x_a`` added to its multiplicative part instead.
    """
    spatial = [i for i, c in enumerate(generator.c) if not c.is_zero()]
    c = list(generator.c)
    c_0 = generator.c_0
    if len(spatial) >= 2:
        a = spatial[0]
        c[a] = c[a] * (1 + relative)
    else:
        a = spatial[0] if spatial else 0
        c_0 = c_0 + CoefficientExpr(relative * _X[a])
    return generator.model_copy(
        update={"name": f"{generator.name}~", "c": tuple(c), "c_0": c_0, "note": "perturbed control"}
    )
