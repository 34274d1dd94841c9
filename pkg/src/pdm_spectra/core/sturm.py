"""Finite-difference eigen-solver for Sturm–Liouville problems.

The generalized problem A u = λ W u is assembled with the symmetric three-point
flux stencil and reduced to standard form through u → √w u. Eigenpairs come from
bisection on the Sturm sequence with inverse iteration (LAPACK stebz/stein), so
level indices are certified by counts. Accuracy comes from Richardson
extrapolation over nested grids, and infinite intervals are truncated
adaptively.
"""
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg

from ..config.settings import settings
from .errors import ContractError, ConvergenceError, DomainError
from .separation import SLProblem

logger = logging.getLogger(__name__)

MIN_NODES = 64
MIN_TARGET_TOL = 1e-10
EIGEN_ABSTOL = 2 * np.finfo(float).tiny  # bisection then stops on its relative criterion
MAX_LEVELS = 7
MAX_WINDOW_DOUBLINGS = 6
FORBIDDEN_MARGIN = 1e4
EIGEN_LIKE_TOL = 1e-2


class Discretization(BaseModel):
    """Three-point discretization of one truncated problem."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    label: str
    n: int
    h: float
    window: Tuple[float, float]
    periodic: bool = False
    nodes: np.ndarray
    weight: np.ndarray
    diag: np.ndarray  # A
    off: np.ndarray
    corner: float = 0.0  # periodic wrap coupling
    d: np.ndarray  # standard form W^{-1/2} A W^{-1/2}
    e: np.ndarray
    e_corner: float = 0.0

    def apply(self, u: np.ndarray) -> np.ndarray:
        """A u."""
        out = self.diag * u
        out[:-1] += self.off * u[1:]
        out[1:] += self.off * u[:-1]
        if self.periodic:
            out[0] += self.corner * u[-1]
            out[-1] += self.corner * u[0]
        return out

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        """w-weighted product h Σ w u v."""
        return float(self.h * np.sum(self.weight * u * v))

    def norm_w(self, u: np.ndarray) -> float:
        return math.sqrt(max(self.inner(u, u), 0.0))

    def norm(self, u: np.ndarray) -> float:
        return float(math.sqrt(self.h * np.sum(u * u)))

    def standard_matrix(self) -> np.ndarray:
        """Dense standard-form matrix."""
        m = np.diag(self.d) + np.diag(self.e, 1) + np.diag(self.e, -1)
        if self.periodic:
            m[0, -1] += self.e_corner
            m[-1, 0] += self.e_corner
        return m


class EigenResult(BaseModel):
    """Lowest eigenpairs of one problem."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    label: str
    eigen_symbol: str = "lambda"
    eigenvalues: List[float] = Field(default_factory=list)
    vectors: np.ndarray  # columns normalized in the w-product, sampled at nodes
    nodes: np.ndarray
    residuals: List[float] = Field(default_factory=list)
    errors: List[float] = Field(default_factory=list)  # change between last two extrapolants
    orders: List[Optional[float]] = Field(default_factory=list)
    n: int
    h: float
    window: Tuple[float, float]
    extrapolated: bool = False
    continuum: bool = False
    labels: Dict[str, float] = Field(default_factory=dict)

    @property
    def count(self) -> int:
        return len(self.eigenvalues)


class RayleighResult(BaseModel):
    """Rayleigh quotient of a sampled function."""
    value: float
    residual: float
    eigen_like: bool


def discretize(problem: SLProblem, n: int) -> Discretization:
    """Assemble the flux stencil on n unknowns of a finite problem.

    Args:
        problem: Problem on a finite interval
        n: Number of unknowns (interior nodes, or nodes on the circle)

    Returns:
        Discretization with Dirichlet rows eliminated
    """
    if n < MIN_NODES:
        raise ContractError(f"discretize needs n >= {MIN_NODES}, got {n}")
    if not problem.is_finite:
        raise ContractError(f"{problem.label}: truncate the interval before discretizing")
    a, b = problem.a, problem.b
    if problem.is_periodic:
        h = (b - a) / n
        nodes = a + h * np.arange(n)
        faces = nodes + 0.5 * h
    else:
        h = (b - a) / (n + 1)
        nodes = a + h * np.arange(1, n + 1)
        faces = a + h * (np.arange(n + 1) + 0.5)

    p_face = problem.p.evaluate_real(faces, what=f"{problem.label} p")
    q = problem.q.evaluate_real(nodes, what=f"{problem.label} q")
    w = problem.w.evaluate_real(nodes, what=f"{problem.label} w")
    if np.any(p_face <= 0):
        raise DomainError(f"{problem.label}: p is not positive on every face")
    if np.any(w <= 0):
        raise DomainError(f"{problem.label}: w is not positive on every node")

    corner = 0.0
    if problem.is_periodic:
        diag = (p_face + np.roll(p_face, 1)) / h**2 + q
        off = -p_face[:-1] / h**2
        corner = float(-p_face[-1] / h**2)
    else:
        diag = (p_face[:-1] + p_face[1:]) / h**2 + q
        off = -p_face[1:-1] / h**2

    s = np.sqrt(w)
    return Discretization(
        label=problem.label,
        n=n,
        h=h,
        window=(a, b),
        periodic=problem.is_periodic,
        nodes=nodes,
        weight=w,
        diag=diag,
        off=off,
        corner=corner,
        d=diag / w,
        e=off / (s[:-1] * s[1:]),
        e_corner=corner / (s[0] * s[-1]),
    )


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """First significant entry of each column positive."""
    for j in range(vectors.shape[1]):
        column = vectors[:, j]
        scale = np.max(np.abs(column))
        if scale == 0:
            continue
        first = column[np.argmax(np.abs(column) > 1e-3 * scale)]
        if first < 0:
            vectors[:, j] = -column
    return vectors


def eigen_lowest(d: Discretization, k: int) -> EigenResult:
    """The k lowest eigenpairs of one discretization.

    Args:
        d: Discretization
        k: Number of eigenpairs, at most n/4

    Returns:
        Eigenvalues in increasing order with w-normalized eigenvectors
    """
    if k > d.n // 4:
        raise ContractError(f"k={k} exceeds n/4 for n={d.n}")
    empty = EigenResult(
        label=d.label, vectors=np.zeros((d.n, 0)), nodes=d.nodes, n=d.n, h=d.h, window=d.window
    )
    if k <= 0:
        return empty

    try:
        if d.periodic:
            values, y = linalg.eigh(d.standard_matrix(), subset_by_index=[0, k - 1])
        else:
            values, y = linalg.eigh_tridiagonal(
                d.d, d.e, select="i", select_range=(0, k - 1), lapack_driver="stebz", tol=EIGEN_ABSTOL
            )
    except (linalg.LinAlgError, ValueError) as e:
        raise ConvergenceError(f"{d.label}: eigen-solve failed on n={d.n}: {e}") from e

    if not d.periodic and np.any(np.diff(values) <= 0):
        raise ConvergenceError(f"{d.label}: eigenvalues are not strictly increasing on n={d.n}")

    vectors = _fix_signs(y / np.sqrt(d.weight)[:, None] / math.sqrt(d.h))
    residuals = []
    for j, lam in enumerate(values):
        u = vectors[:, j]
        residuals.append(d.norm(d.apply(u) - lam * d.weight * u) / d.norm(u))
    logger.debug(f"{d.label}: n={d.n} h={d.h:.3g} lowest={values[0]:.10g}")
    return empty.model_copy(
        update={"eigenvalues": [float(v) for v in values], "vectors": vectors, "residuals": residuals}
    )


def sturm_count(d: Discretization, x: float) -> int:
    """Number of eigenvalues below x, from the LDLᵀ pivots of T − xI."""
    if d.periodic:
        raise ContractError("Sturm counts need a tridiagonal (non-periodic) discretization")
    tiny = np.finfo(float).tiny
    count = 0
    pivot = d.d[0] - x
    for i in range(d.n):
        if i > 0:
            pivot = d.d[i] - x - d.e[i - 1] ** 2 / pivot
        if pivot == 0:
            pivot = -tiny
        if pivot < 0:
            count += 1
    return count


def rayleigh(d: Discretization, u: np.ndarray) -> RayleighResult:
    """⟨u, Au⟩ / ⟨u, Wu⟩ and the residual ‖(A − ρW)u‖/‖u‖."""
    u = np.asarray(u, dtype=float)
    if u.shape != d.nodes.shape:
        raise ContractError(f"Sample has shape {u.shape}, expected {d.nodes.shape}")
    denominator = d.inner(u, u)
    if denominator == 0 or not math.isfinite(denominator):
        raise DomainError("Rayleigh quotient of a zero or non-finite sample")
    au = d.apply(u)
    value = float(d.h * np.sum(u * au)) / denominator
    residual = d.norm(au - value * d.weight * u) / d.norm(u)
    return RayleighResult(
        value=value, residual=residual, eigen_like=residual <= EIGEN_LIKE_TOL * max(1.0, abs(value))
    )


def operator_residual(d: Discretization, u: np.ndarray, lam: float) -> float:
    """‖(A − λW)u‖/‖u‖ over interior rows; the two boundary rows are left out."""
    u = np.asarray(u, dtype=float)
    norm = d.norm(u)
    if norm == 0 or not math.isfinite(norm):
        raise DomainError("Operator residual of a zero or non-finite sample")
    r = d.apply(u) - lam * d.weight * u
    return float(math.sqrt(d.h * np.sum(r[1:-1] ** 2))) / norm


def _next_size(n: int, periodic: bool) -> int:
    """Nested refinement that halves h exactly."""
    return 2 * n if periodic else 2 * n + 1


def _check_monotone(label: str, history: Sequence[np.ndarray]) -> List[Optional[float]]:
    """Raise unless the last three levels move in one direction; return observed orders."""
    a, b, c = (np.asarray(v) for v in history[-3:])
    d1, d2 = b - a, c - b
    noise = 1e-11 * np.maximum(1.0, np.abs(c))
    orders: List[Optional[float]] = []
    for j in range(len(c)):
        if abs(d1[j]) <= noise[j] or abs(d2[j]) <= noise[j]:
            orders.append(None)
            continue
        if d1[j] * d2[j] < 0:
            raise ConvergenceError(
                f"{label}: level {j} converges non-monotonically ({d1[j]:.3g}, {d2[j]:.3g}); "
                "check the endpoint treatment"
            )
        orders.append(math.log2(abs(d1[j] / d2[j])))
    return orders


def refine(
    problem: SLProblem, k: int, target_tol: Optional[float] = None, n0: Optional[int] = None
) -> EigenResult:
    """Richardson-extrapolated eigenvalues of a finite problem.

    Args:
        problem: Problem on a finite interval
        k: Number of levels
        target_tol: Stop when successive extrapolants differ by less (relative to max(1, |λ|))
        n0: Unknowns on the coarsest level, default from the grid profile

    Returns:
        Extrapolated eigenvalues with the finest-grid eigenvectors
    """
    tol = settings.claim_tol if target_tol is None else target_tol
    if tol < MIN_TARGET_TOL:
        raise ContractError(f"target_tol must be >= {MIN_TARGET_TOL}, got {tol}")
    n = n0 or settings.grid_profile.start_size
    periodic = problem.is_periodic

    coarse = eigen_lowest(discretize(problem, n), k)
    if k <= 0:
        return coarse
    n = _next_size(n, periodic)
    fine = eigen_lowest(discretize(problem, n), k)
    history = [np.asarray(coarse.eigenvalues), np.asarray(fine.eigenvalues)]
    previous = (4 * history[1] - history[0]) / 3

    for _ in range(MAX_LEVELS):
        n = _next_size(n, periodic)
        finest = eigen_lowest(discretize(problem, n), k)
        history.append(np.asarray(finest.eigenvalues))
        orders = _check_monotone(problem.label, history)
        current = (4 * history[-1] - history[-2]) / 3
        errors = np.abs(current - previous)
        logger.debug(f"{problem.label}: n={n} max change {float(np.max(errors)):.3g}")
        if np.all(errors < tol * np.maximum(1.0, np.abs(current))):
            return finest.model_copy(
                update={
                    "eigen_symbol": problem.eigen_symbol,
                    "eigenvalues": [float(v) for v in current],
                    "errors": [float(e) for e in errors],
                    "orders": orders,
                    "extrapolated": True,
                    "continuum": problem.continuum,
                }
            )
        previous = current
    raise ConvergenceError(
        f"{problem.label}: extrapolants did not settle to {tol:g} by n={n} "
        f"(last change {float(np.max(errors)):.3g})"
    )


def _forbidden_trim(
    problem: SLProblem, window: Tuple[float, float], ceiling: float
) -> Tuple[float, float]:
    """Cut infinite sides where q/w exceeds the ceiling; the eigenfunctions are negligible there."""
    lo, hi = window
    x = np.linspace(lo, hi, 4001)
    with np.errstate(all="ignore"):
        v = np.real(np.asarray(problem.q.evaluate(x) / problem.w.evaluate(x), dtype=complex))
    v = np.where(np.isfinite(v), v, np.inf)
    well = int(np.argmin(v))
    above = v > ceiling
    if not math.isfinite(problem.a):
        left = np.nonzero(above[:well])[0]
        if left.size:
            lo = float(x[left[-1]])
    if not math.isfinite(problem.b):
        right = np.nonzero(above[well:])[0]
        if right.size:
            hi = float(x[well + right[0]])
    return lo, hi


def _widen(problem: SLProblem, window: Tuple[float, float]) -> Tuple[float, float]:
    """Double the extent of the window on its infinite sides."""
    lo, hi = window
    width = hi - lo
    if not math.isfinite(problem.a):
        lo -= width / 2 if not math.isfinite(problem.b) else width
    if not math.isfinite(problem.b):
        hi += width / 2 if not math.isfinite(problem.a) else width
    return lo, hi


def solve(
    problem: SLProblem,
    k: int,
    tol: Optional[float] = None,
    n0: Optional[int] = None,
    labels: Optional[Dict[str, float]] = None,
) -> EigenResult:
    """Lowest k levels of any problem, truncating infinite intervals adaptively.

    The window is widened at fixed spacing until the lowest levels change by
    less than the truncation tolerance. A window that never settles, or a
    problem known to have continuous spectrum, gives a boxed result with
    ``continuum`` set.
    """
    n0 = n0 or settings.grid_profile.start_size
    labels = dict(labels or {})
    if problem.is_finite:
        return refine(problem, k, tol, n0).model_copy(update={"labels": labels})

    window = problem.initial_window()
    continuum = problem.continuum
    if k > 0 and not continuum:
        h = (window[1] - window[0]) / (n0 + 1)
        previous = eigen_lowest(discretize(problem.truncate(*window), n0), k)
        settled = False
        for _ in range(MAX_WINDOW_DOUBLINGS):
            ceiling = max(previous.eigenvalues) + FORBIDDEN_MARGIN
            candidate = _forbidden_trim(problem, _widen(problem, window), ceiling)
            n = max(MIN_NODES, int(round((candidate[1] - candidate[0]) / h)) - 1, 4 * k)
            current = eigen_lowest(discretize(problem.truncate(*candidate), n), k)
            change = np.abs(np.asarray(current.eigenvalues) - np.asarray(previous.eigenvalues))
            logger.debug(f"{problem.label}: window {candidate[0]:.4g}..{candidate[1]:.4g} change {float(np.max(change)):.3g}")
            window, previous = candidate, current
            if np.all(change < settings.truncation_tol * np.maximum(1.0, np.abs(current.eigenvalues))):
                settled = True
                break
        if not settled:
            logger.warning(f"{problem.label}: truncation did not settle; reporting a boxed continuum")
            continuum = True

    logger.debug(f"{problem.label}: solving on window {window[0]:.6g}..{window[1]:.6g}")
    result = refine(problem.truncate(*window), k, tol, n0)
    return result.model_copy(update={"continuum": continuum, "labels": labels, "window": window})
