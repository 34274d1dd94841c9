"""PDM Hamiltonian and first-order generators on cell-centred 3D grids."""
import logging
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from pydantic import BaseModel, ConfigDict, model_validator

from .catalog import GeneratorSpec, SystemSpec
from .errors import ContractError, DomainError
from .expr import CoefficientExpr

logger = logging.getLogger(__name__)

GridField = np.ndarray  # complex values on Grid3 nodes, shape (n, n, n)

MIN_POINTS = 16
SUPPORT_LAYERS = 2
STENCIL_ORDERS = (2, 4)


class Grid3(BaseModel):
    """Cell-centred tensor grid; nodes sit h/2 inside the box faces."""
    model_config = ConfigDict(frozen=True)

    lo: Tuple[float, float, float]
    hi: Tuple[float, float, float]
    n: int

    @model_validator(mode="after")
    def validate_grid(self) -> "Grid3":
        """At least 16 points per axis on a non-degenerate box."""
        if self.n < MIN_POINTS:
            raise ContractError(f"Grid3 needs n >= {MIN_POINTS}, got {self.n}")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ContractError(f"Degenerate box {self.lo} .. {self.hi}")
        return self

    @classmethod
    def from_box(cls, box: Sequence[Sequence[float]], n: int) -> "Grid3":
        """Grid on [[lo, hi]] * 3; raises ContractError instead of a ValidationError."""
        lo = tuple(float(b[0]) for b in box)
        hi = tuple(float(b[1]) for b in box)
        if n < MIN_POINTS:
            raise ContractError(f"Grid3 needs n >= {MIN_POINTS}, got {n}")
        if len(lo) != 3 or any(h <= l for l, h in zip(lo, hi)):
            raise ContractError(f"Degenerate box {lo} .. {hi}")
        return cls(lo=lo, hi=hi, n=n)  # type: ignore[arg-type]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def spacing(self) -> Tuple[float, float, float]:
        return tuple((h - l) / self.n for l, h in zip(self.lo, self.hi))  # type: ignore[return-value]

    @property
    def max_spacing(self) -> float:
        return max(self.spacing)

    @property
    def cell_volume(self) -> float:
        h1, h2, h3 = self.spacing
        return h1 * h2 * h3

    def axis(self, a: int) -> np.ndarray:
        """Node coordinates along one axis."""
        h = self.spacing[a]
        return self.lo[a] + h * (np.arange(self.n) + 0.5)

    def faces(self, a: int, extra: int = 0) -> np.ndarray:
        """Face coordinates along one axis, box faces included (n + 1 + 2·extra values).

        `extra` adds faces outside the box on both sides.
        """
        return self.lo[a] + self.spacing[a] * np.arange(-extra, self.n + 1 + extra)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Sparse broadcastable node coordinates."""
        return tuple(np.meshgrid(*(self.axis(a) for a in range(3)), indexing="ij", sparse=True))  # type: ignore[return-value]

    def face_mesh(self, a: int, extra: int = 0) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Sparse coordinates of the faces normal to axis a."""
        axes = [self.axis(b) for b in range(3)]
        axes[a] = self.faces(a, extra)
        return tuple(np.meshgrid(*axes, indexing="ij", sparse=True))  # type: ignore[return-value]

    def interior(self, layers: int = 2 * SUPPORT_LAYERS) -> Tuple[slice, slice, slice]:
        """Index of the nodes at least `layers` away from every face."""
        s = slice(layers, self.n - layers)
        return (s, s, s)


def inner_product(grid: Grid3, u: GridField, v: GridField) -> complex:
    """Discrete L² product h₁h₂h₃ Σ conj(u) v."""
    if u.shape != grid.shape or v.shape != grid.shape:
        raise ContractError(f"Field shapes {u.shape}, {v.shape} do not match grid {grid.shape}")
    return complex(grid.cell_volume * np.vdot(u, v))


def norm(grid: Grid3, u: GridField, region: Optional[Tuple[slice, ...]] = None) -> float:
    """Discrete L² norm, optionally restricted to an index region."""
    values = u if region is None else u[region]
    return float(np.sqrt(grid.cell_volume * np.sum(np.abs(values) ** 2)))


def check_interior_support(u: GridField, layers: int = SUPPORT_LAYERS) -> None:
    """Raise ContractError unless u vanishes on the outermost node layers."""
    scale = float(np.max(np.abs(u), initial=0.0))
    if scale == 0.0:
        return
    mask = np.ones(u.shape, dtype=bool)
    inner = tuple(slice(layers, s - layers) for s in u.shape)
    mask[inner] = False
    if float(np.max(np.abs(u[mask]))) > 1e-12 * scale:
        raise ContractError(f"Field does not vanish on the {layers} outermost layers")


def effective_potential(
    v_hat: CoefficientExpr, f: CoefficientExpr, alpha: float, gamma: float
) -> CoefficientExpr:
    """Compact-form potential V = V̂ + ¼(α+γ)Δf + αγ |∇f|²/(2f).

    Args:
        v_hat: Potential of the ordered kinetic form
        f: Inverse mass
        alpha: Ambiguity parameter α (β = −1 − α − γ)
        gamma: Ambiguity parameter γ

    Returns:
        Potential with a positivity guard on f; evaluating where f ≤ 0 raises DomainError
    """
    spatial = [v for v in f.variables if v != "t"]
    laplacian = sum((f.diff(v, 2) for v in spatial), CoefficientExpr.constant(0, f.variables))
    gradient2 = sum((f.diff(v) ** 2 for v in spatial), CoefficientExpr.constant(0, f.variables))
    correction = sp.Rational(1, 4) * (sp.nsimplify(alpha) + sp.nsimplify(gamma)) * laplacian.expr
    correction += sp.nsimplify(alpha) * sp.nsimplify(gamma) * gradient2.expr / (2 * f.expr)
    return CoefficientExpr(
        sp.simplify(v_hat.expr + correction), f.variables, guards=(*v_hat.guards, *f.guards, f.expr)
    )


class HamiltonianOperator:
    """H = ½ p_a f p_a + V on a fixed grid, coefficients sampled once.

    Order 2 is the three-point flux stencil. Order 4 replaces both the face
    gradient and the divergence by the staggered four-point difference
    (−u₊₃/₂ + 27u₊½ − 27u₋½ + u₋₃/₂)/(24h), so H = ½ Gᵀ diag(f) G + V stays
    exactly symmetric.
    """

    def __init__(
        self,
        inverse_mass: CoefficientExpr,
        potential: CoefficientExpr,
        grid: Grid3,
        params: Optional[Mapping[str, complex]] = None,
        order: int = 2,
    ):
        """Initialize operator.

        Args:
            inverse_mass: f(x)
            potential: V(x)
            grid: Evaluation grid
            params: Parameter values substituted at evaluation
            order: Stencil order, 2 or 4
        """
        if order not in STENCIL_ORDERS:
            raise ContractError(f"Stencil order must be one of {STENCIL_ORDERS}, got {order}")
        self.grid = grid
        self.order = order
        params = dict(params or {})
        extra = 0 if order == 2 else 1
        self.face_f = []
        for a in range(3):
            x1, x2, x3 = grid.face_mesh(a, extra)
            f = inverse_mass.evaluate_real(x1, x2, x3, 0.0, params=params, what="inverse mass")
            if np.any(f <= 0):
                raise DomainError("Inverse mass is not positive on the grid")
            self.face_f.append(np.ascontiguousarray(f))
        x1, x2, x3 = grid.mesh()
        self.v = np.ascontiguousarray(
            potential.evaluate_real(x1, x2, x3, 0.0, params=params, what="potential")
        )
        logger.debug(f"Hamiltonian sampled on n={grid.n} (h={grid.max_spacing:.4g}, order {order})")

    @classmethod
    def for_system(
        cls,
        spec: SystemSpec,
        grid: Grid3,
        params: Optional[Mapping[str, complex]] = None,
        order: int = 2,
    ) -> "HamiltonianOperator":
        return cls(spec.inverse_mass, spec.potential, grid, params, order)

    def __call__(self, psi: GridField) -> GridField:
        """Flux-form stencil with zero values outside the box."""
        out = self.v * psi
        for a, h in enumerate(self.grid.spacing):
            if self.order == 2:
                pad = [(0, 0)] * 3
                pad[a] = (1, 1)
                flux = self.face_f[a] * np.diff(np.pad(psi, pad), axis=a)
                out = out - 0.5 * np.diff(flux, axis=a) / h**2
            else:
                pad = [(0, 0)] * 3
                pad[a] = (3, 3)
                # n + 3 faces from lo − h to hi + h
                flux = self.face_f[a] * _staggered4(np.pad(psi, pad), a, self.grid.n + 3)
                out = out - 0.5 * _staggered4(flux, a, self.grid.n) / h**2
        return out


def _staggered4(u: np.ndarray, a: int, count: int) -> np.ndarray:
    """(−u[k+3] + 27u[k+2] − 27u[k+1] + u[k]) for k < count along axis a, unscaled."""

    def part(k: int) -> np.ndarray:
        index = [slice(None)] * 3
        index[a] = slice(k, k + count)
        return u[tuple(index)]

    return (-part(3) + 27 * part(2) - 27 * part(1) + part(0)) / 24


def apply_hamiltonian(
    spec: SystemSpec,
    params: Optional[Mapping[str, complex]],
    grid: Grid3,
    psi: GridField,
    order: int = 2,
) -> GridField:
    """Hψ for an interior-supported field."""
    if psi.shape != grid.shape:
        raise ContractError(f"Field shape {psi.shape} does not match grid {grid.shape}")
    check_interior_support(psi)
    return HamiltonianOperator.for_system(spec, grid, params, order)(psi)


def _derivative4(psi: GridField, a: int, h: float) -> GridField:
    """Fourth-order central first derivative along axis a, zero outside the box."""
    pad = [(0, 0)] * 3
    pad[a] = (2, 2)
    p = np.pad(psi, pad)
    n = psi.shape[a]

    def shifted(k: int) -> np.ndarray:
        index = [slice(None)] * 3
        index[a] = slice(2 + k, 2 + k + n)
        return p[tuple(index)]

    return (-shifted(2) + 8 * shifted(1) - 8 * shifted(-1) + shifted(-2)) / (12 * h)


class GeneratorOperator:
    """A generator with coefficients sampled on a grid at one time."""

    def __init__(
        self,
        generator: GeneratorSpec,
        grid: Grid3,
        t: float = 0.0,
        params: Optional[Mapping[str, complex]] = None,
    ):
        """Initialize operator.

        Args:
            generator: Generator in coefficient form
            grid: Evaluation grid
            t: Time at which coefficients are sampled
            params: Parameter values
        """
        self.generator = generator
        self.grid = grid
        self.t = t
        params = dict(params or {})
        x1, x2, x3 = grid.mesh()

        def sample(c: CoefficientExpr) -> Optional[np.ndarray]:
            if c.is_zero():
                return None
            values = np.asarray(c.evaluate(x1, x2, x3, t, params=params), dtype=complex)
            if not np.all(np.isfinite(values)):
                raise DomainError(f"Generator {generator.name} has a singular coefficient on the grid")
            return np.ascontiguousarray(np.broadcast_to(values, grid.shape))

        self.c_t = sample(generator.c_t)
        self.c = [sample(c) for c in generator.c]
        self.c_0 = sample(generator.c_0)

    def __call__(self, psi: GridField, dpsi_dt: Optional[GridField] = None) -> GridField:
        out = np.zeros(self.grid.shape, dtype=complex)
        for a, (c, h) in enumerate(zip(self.c, self.grid.spacing)):
            if c is not None:
                out += c * _derivative4(psi, a, h)
        if self.c_0 is not None:
            out += self.c_0 * psi
        if self.c_t is not None:
            if dpsi_dt is None:
                raise ContractError(f"{self.generator.name} has a ∂t term; supply the time derivative")
            out += self.c_t * dpsi_dt
        return out


def apply_generator(
    g: GeneratorSpec,
    grid: Grid3,
    psi: GridField,
    t: float = 0.0,
    params: Optional[Mapping[str, complex]] = None,
    dpsi_dt: Optional[GridField] = None,
) -> GridField:
    """(Σ c_a ∂_a + c_0)ψ, plus c_t · ∂tψ when the generator has a time derivative."""
    if psi.shape != grid.shape:
        raise ContractError(f"Field shape {psi.shape} does not match grid {grid.shape}")
    check_interior_support(psi)
    return GeneratorOperator(g, grid, t, params)(psi, dpsi_dt)
