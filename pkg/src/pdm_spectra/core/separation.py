"""Reduction of separable systems to one-dimensional Sturm–Liouville problems.

Every problem is kept in self-adjoint form −(p u′)′ + q u = λ w u. Changes of
variable and Liouville transforms carry a chart back to the coordinate of the
printed equation and a sampling factor, so closed-form solutions written in the
original coordinate can be sampled on any derived problem.
"""
import logging
import math
from enum import Enum
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import sympy as sp
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..config.schemas import QuantumNumbers, ValidatedParams
from .catalog import SeparationScheme, SystemSpec
from .errors import DomainError, UnsupportedError
from .expr import X3, CoefficientExpr, coordinate, one_dimensional

logger = logging.getLogger(__name__)

Sampler = Callable[[np.ndarray], np.ndarray]


class Endpoint(str, Enum):
    """Endpoint treatment."""

    DIRICHLET = "dirichlet-truncated"
    SINGULAR = "natural-singular"
    PERIODIC = "periodic"


class SLProblem(BaseModel):
    """−(p u′)′ + q u = λ w u on (a, b)."""
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    label: str
    variable: str
    p: CoefficientExpr
    q: CoefficientExpr
    w: CoefficientExpr
    a: float
    b: float  # ±inf allowed
    left: Endpoint = Endpoint.DIRICHLET
    right: Endpoint = Endpoint.DIRICHLET
    original: str  # coordinate of the printed equation
    chart: CoefficientExpr  # original coordinate as a function of `variable`
    sample_scale: CoefficientExpr  # u = sample_scale · (u_original ∘ chart)
    eigen_symbol: str = "E"
    eigen_scale: Optional[float] = 1.0  # λ = scale·E + shift; None for separation constants
    eigen_shift: float = 0.0
    center: Optional[float] = None  # truncation hints for infinite intervals
    window: Optional[float] = None
    continuum: bool = False
    note: Optional[str] = None
    constants: Dict[str, float] = Field(default_factory=dict)  # physical constants the problem was built from

    @model_validator(mode="after")
    def validate_problem(self) -> "SLProblem":
        """Ordered interval and one-variable coefficients."""
        if not self.a < self.b:
            raise DomainError(f"{self.label}: interval ({self.a}, {self.b}) is empty")
        for name in ("p", "q", "w", "chart", "sample_scale"):
            expr = getattr(self, name)
            if expr.variables != (self.variable,):
                raise DomainError(f"{self.label}: {name} must be a function of {self.variable}")
        if (self.left is Endpoint.PERIODIC) != (self.right is Endpoint.PERIODIC):
            raise DomainError(f"{self.label}: periodic conditions need both endpoints")
        return self

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.a) and math.isfinite(self.b)

    @property
    def is_periodic(self) -> bool:
        return self.left is Endpoint.PERIODIC

    def coefficients(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """p, q, w sampled at points of the open interval."""
        return (
            self.p.evaluate_real(x, what=f"{self.label} p"),
            self.q.evaluate_real(x, what=f"{self.label} q"),
            self.w.evaluate_real(x, what=f"{self.label} w"),
        )

    def sample_points(self, count: int = 1000) -> np.ndarray:
        """Interior points; infinite sides are cut at the truncation hints."""
        lo, hi = self.initial_window()
        return np.linspace(lo, hi, count + 2)[1:-1]

    def initial_window(self) -> Tuple[float, float]:
        """Finite interval to start truncation from."""
        width = self.window or 10.0
        centre = self.center
        lo, hi = self.a, self.b
        if not math.isfinite(lo) and not math.isfinite(hi):
            c = centre if centre is not None else 0.0
            return c - width, c + width
        if not math.isfinite(hi):
            return lo, (centre if centre is not None else lo) + width
        if not math.isfinite(lo):
            return (centre if centre is not None else hi) - width, hi
        return lo, hi

    def check_self_adjoint(self, count: int = 1000) -> None:
        """p > 0 and w > 0 on interior sample points; q real."""
        p, _, w = self.coefficients(self.sample_points(count))
        if np.any(p <= 0) or np.any(w <= 0):
            raise DomainError(f"{self.label}: p and w must be positive on the interval")

    def truncate(self, lo: float, hi: float) -> "SLProblem":
        """Restrict to [lo, hi] with Dirichlet walls at the new finite ends."""
        lo, hi = max(lo, self.a), min(hi, self.b)
        left = self.left if lo == self.a else Endpoint.DIRICHLET
        right = self.right if hi == self.b else Endpoint.DIRICHLET
        return self.model_copy(update={"a": lo, "b": hi, "left": left, "right": right})

    def energy(self, value: float) -> float:
        """Hamiltonian eigenvalue for an eigenvalue of this problem."""
        if self.eigen_scale is None:
            raise DomainError(f"{self.label}: eigenvalue {self.eigen_symbol} is not an energy")
        return (value - self.eigen_shift) / self.eigen_scale

    def pull(self, fn: Sampler) -> Sampler:
        """Sampler of a solution given in the original coordinate."""

        def sampled(x: np.ndarray) -> np.ndarray:
            x = np.asarray(x, dtype=float)
            return self.sample_scale.evaluate_real(x) * fn(self.chart.evaluate_real(x))

        return sampled

    def rescaled(self, factor: float) -> "SLProblem":
        """Multiply the operator (p and q) by a positive constant."""
        if factor <= 0:
            raise DomainError("Rescaling factor must be positive")
        return self.model_copy(
            update={
                "p": self.p * factor,
                "q": self.q * factor,
                "eigen_scale": None if self.eigen_scale is None else self.eigen_scale * factor,
                "eigen_shift": self.eigen_shift * factor,
            }
        )

    def dump(self) -> Dict[str, Any]:
        """Problem-dump record."""
        return {
            "label": self.label,
            "variable": self.variable,
            "p": self.p.source,
            "q": self.q.source,
            "w": self.w.source,
            "interval": [endpoint_text(self.a), endpoint_text(self.b)],
            "endpoints": [self.left.value, self.right.value],
            "constants": dict(self.constants),
            "original": self.original,
            "chart": self.chart.source,
            "sample_scale": self.sample_scale.source,
            "eigenvalue": self.eigen_symbol,
            "eigen_scale": self.eigen_scale,
            "eigen_shift": self.eigen_shift,
            "continuum": self.continuum,
            "note": self.note,
        }


def endpoint_text(x: float) -> Union[float, str]:
    """JSON-safe endpoint: infinite ends become "inf" / "-inf"."""
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else "-inf"


def make_problem(
    label: str,
    variable: str,
    p: str,
    q: str,
    w: str,
    interval: Tuple[float, float],
    params: Optional[Mapping[str, complex]] = None,
    **extra: Any,
) -> SLProblem:
    """Build a problem from expression text in one coordinate."""
    values = dict(params or {})

    def parse(text: str) -> CoefficientExpr:
        return one_dimensional(text, variable).with_params(values)

    identity = CoefficientExpr(coordinate(variable), (variable,))
    return SLProblem(
        label=label,
        variable=variable,
        p=parse(p),
        q=parse(q),
        w=parse(w),
        a=interval[0],
        b=interval[1],
        original=extra.pop("original", variable),
        chart=extra.pop("chart", identity),
        sample_scale=extra.pop("sample_scale", CoefficientExpr.constant(1, (variable,))),
        **extra,
    )


def _sample_point(a: float, b: float) -> float:
    if math.isfinite(a) and math.isfinite(b):
        return 0.5 * (a + b)
    if math.isfinite(a):
        return a + 1.0
    if math.isfinite(b):
        return b - 1.0
    return 0.0


def change_variable(
    problem: SLProblem,
    variable: str,
    chart: str,
    interval: Tuple[float, float],
    center: Optional[float] = None,
    window: Optional[float] = None,
) -> SLProblem:
    """Substitute old = G(new); P = p/|G′|, Q = q|G′|, W = w|G′|.

    Args:
        problem: Problem in the old variable
        variable: New coordinate name
        chart: Text of G, the old coordinate in terms of the new one
        interval: Image of the old interval in the new coordinate
        center: Truncation centre in the new coordinate
        window: Truncation half-width in the new coordinate

    Returns:
        Equivalent problem with the same eigenvalues
    """
    g = one_dimensional(chart, variable)
    dg = g.diff(variable)
    slope = complex(dg.evaluate(np.asarray(_sample_point(*interval))))
    if slope.real == 0:
        raise DomainError(f"Chart {chart} is not monotone near its sample point")
    sign = 1 if slope.real > 0 else -1
    abs_dg = dg * sign

    old = problem.variable
    left, right = (problem.left, problem.right) if sign > 0 else (problem.right, problem.left)
    return problem.model_copy(
        update={
            "variable": variable,
            "p": problem.p.compose(old, g) / abs_dg,
            "q": problem.q.compose(old, g) * abs_dg,
            "w": problem.w.compose(old, g) * abs_dg,
            "a": float(interval[0]),
            "b": float(interval[1]),
            "left": left,
            "right": right,
            "chart": problem.chart.compose(old, g),
            "sample_scale": problem.sample_scale.compose(old, g),
            "center": center,
            "window": window,
        }
    )


def liouville_normal_form(
    problem: SLProblem, absorb_constant: bool = False, label: Optional[str] = None
) -> SLProblem:
    """Map −(cW u′)′ + Q u = λ W u to −v″ + V v = (λ/c) v with v = √W u.

    V = Q/(cW) + ρ″/ρ for ρ = √W. With ``absorb_constant`` a constant ρ″/ρ is
    moved from the potential into the eigenvalue shift.
    """
    x = coordinate(problem.variable)
    ratio = sp.simplify(problem.p.expr / problem.w.expr)
    if x in ratio.free_symbols:
        values = problem.p.evaluate_real(problem.sample_points(200)) / problem.w.evaluate_real(
            problem.sample_points(200)
        )
        if np.ptp(values) > 1e-10 * np.max(np.abs(values)):
            raise DomainError(f"{problem.label}: p/w is not constant; no Liouville normal form")
        c = float(np.mean(values))
    else:
        c = float(ratio)
    if c <= 0:
        raise DomainError(f"{problem.label}: p/w must be positive")

    rho = sp.sqrt(problem.w.expr)
    curvature = sp.simplify(sp.diff(rho, x, 2) / rho)
    potential = problem.q.expr / (c * problem.w.expr)
    shift = problem.eigen_shift / c
    if absorb_constant and x not in curvature.free_symbols:
        shift -= float(curvature)
    else:
        potential = potential + curvature

    variables = (problem.variable,)
    return problem.model_copy(
        update={
            "label": label or problem.label,
            "p": CoefficientExpr.constant(1, variables),
            "q": CoefficientExpr(sp.simplify(potential), variables),
            "w": CoefficientExpr.constant(1, variables),
            "sample_scale": problem.sample_scale * CoefficientExpr(rho, variables),
            "eigen_scale": None if problem.eigen_scale is None else problem.eigen_scale / c,
            "eigen_shift": shift,
        }
    )


# Per-system reductions


def _qn_int(qn: QuantumNumbers, name: str, system: int) -> int:
    value = getattr(qn, name)
    if value is None:
        raise DomainError(f"System {system} needs quantum number '{name}'")
    return int(value)


def _qn_float(qn: QuantumNumbers, name: str, default: float = 0.0) -> float:
    value = getattr(qn, name)
    return default if value is None else float(value)


def radial_problem(spec: SystemSpec, params: Mapping[str, complex], l: int) -> SLProblem:
    """Spherical φ-form: −(½fφ′)′ + [f′/(2r) + f l(l+1)/(2r²) + V]φ = Eφ, ψ = φ Y/r."""
    f = spec.inverse_mass.restrict_radial().with_params(params)
    v = spec.potential.restrict_radial().with_params(params)
    r = coordinate("r")
    lsq = l * (l + 1)
    q = sp.diff(f.expr, r) / (2 * r) + f.expr * lsq / (2 * r**2) + v.expr
    upper = 1.0 if spec.id == 2 else math.inf
    identity = CoefficientExpr(r, ("r",))
    return SLProblem(
        label=f"radial l={l}",
        variable="r",
        p=CoefficientExpr(f.expr / 2, ("r",)),
        q=CoefficientExpr(sp.simplify(q), ("r",)),
        w=CoefficientExpr.constant(1, ("r",)),
        a=0.0,
        b=upper,
        left=Endpoint.SINGULAR,
        right=Endpoint.SINGULAR,
        original="r",
        chart=identity,
        sample_scale=CoefficientExpr.constant(1, ("r",)),
        note="radial function R = φ/r",
    )


def _cylindrical_radial(
    spec_id: int, power: float, m: int, k3: float, coupling: str, params: Mapping[str, complex]
) -> SLProblem:
    """Cylindrical radial problem for f = r̃^power, multiplied through by the weight r̃.

    −(½ r̃^{power+1} R′)′ + [m² r̃^{power−1}/2 + k3² r̃^{power+1}/2 + r̃V] R = E r̃ R
    """
    p = f"rt**({power} + 1)/2"
    q = f"{m**2}*rt**({power} - 1)/2 + {k3**2}*rt**({power} + 1)/2 + ({coupling})"
    return make_problem(
        f"radial m={m} k3={k3:g}", "rt", p, q, "rt", (0.0, math.inf), params,
        left=Endpoint.SINGULAR, right=Endpoint.SINGULAR,
        note=f"system {spec_id}: ψ = R(r̃) e^(i m φ) e^(i k3 x3), weight r̃",
    )


def _scaled_angular_radial(k3: float, params: Mapping[str, complex]) -> SLProblem:
    """−(r̃³Ψ′)′ + k3² r̃³ Ψ = M r̃ Ψ; continuous for every k3."""
    return make_problem(
        f"radial k3={k3:g}", "rt", "rt**3", f"{k3**2}*rt**3", "rt", (0.0, math.inf), params,
        left=Endpoint.SINGULAR, right=Endpoint.SINGULAR, eigen_symbol="M", eigen_scale=None,
        continuum=True, note="separation constant M shared with the angular equation",
    )


def _angular_exponential(
    label: str, exponent: str, potential: str, energy: float, params: Mapping[str, complex]
) -> SLProblem:
    """−(e^{aφ}Φ′)′ + (potential − 2E)Φ = Ê e^{aφ}Φ on [0, 2π], Ê = −(M + 2κ)."""
    return make_problem(
        label, "phi", f"exp({exponent}*phi)", f"{potential} - 2*{energy}", f"exp({exponent}*phi)",
        (0.0, 2 * math.pi), params, eigen_symbol="E_hat", eigen_scale=None,
        note=f"energy E={energy:g} enters as a coupling; Ê = −(M + 2κ)",
    )


def reduce(
    spec: SystemSpec, validated: ValidatedParams, qn: QuantumNumbers
) -> List[Tuple[str, SLProblem]]:
    """One-dimensional problems of a system in the coordinates of its printed equations.

    Args:
        spec: System spec
        validated: Parameters accepted by validate_params
        qn: Separation constants for the system's scheme

    Returns:
        (label, problem) pairs; spherical systems give the φ-form radial problem
    """
    if validated.system != spec.id:
        raise DomainError(f"Parameters validated for system {validated.system}, not {spec.id}")
    params = validated.params
    values = validated.values()
    if not spec.is_solvable(params):
        raise UnsupportedError(
            f"System {spec.id} is not separable for kappa != 0 (small symmetry algebra)"
        )

    if spec.separation is SeparationScheme.SPHERICAL:
        l = _qn_int(qn, "l", spec.id)
        problem = radial_problem(spec, values, l)
        if spec.id == 10:
            problem = problem.model_copy(update={"center": 1.0, "window": 1.0})
        return [("radial", problem)]

    if spec.id in (3, 6):
        k2 = _qn_float(qn, "k1") ** 2 + _qn_float(qn, "k2") ** 2
        f = spec.inverse_mass.with_params(values).expr
        v = spec.potential.with_params(values).expr
        x3 = coordinate("x3")

        f1 = f.subs(X3, x3)
        v1 = v.subs(X3, x3)
        problem = SLProblem(
            label=f"x3 k={math.sqrt(k2):g}",
            variable="x3",
            p=CoefficientExpr(f1 / 2, ("x3",)),
            q=CoefficientExpr(k2 * f1 / 2 + v1, ("x3",)),
            w=CoefficientExpr.constant(1, ("x3",)),
            a=0.0,
            b=math.inf,
            left=Endpoint.SINGULAR,
            right=Endpoint.SINGULAR,
            original="x3",
            chart=CoefficientExpr(x3, ("x3",)),
            sample_scale=CoefficientExpr.constant(1, ("x3",)),
            note="ψ = X(x3) e^(i(k1 x1 + k2 x2))",
        )
        return [("axial", problem)]

    if spec.id == 5:
        k2 = _qn_float(qn, "k2") ** 2 + _qn_float(qn, "k3") ** 2
        lam = float(np.real(values["lam"]))
        problem = make_problem(
            f"x1 k={math.sqrt(k2):g}", "x1", "x1**3/2", f"{k2}*x1**3/2 + {lam}*x1", "1",
            (0.0, math.inf), values, left=Endpoint.SINGULAR, right=Endpoint.SINGULAR,
            note="ψ = X(x1) e^(i(k2 x2 + k3 x3)), kappa = 0",
        )
        return [("transverse", problem)]

    if spec.id == 4:
        m = _qn_int(qn, "kappa_ang", spec.id)
        lam = float(np.real(values["lam"]))
        return [("radial", _cylindrical_radial(4, 3.0, m, _qn_float(qn, "omega_ax"), f"{lam}*rt**2", values))]

    if spec.id == 7:
        sigma = float(np.real(values["sigma"]))
        lam = float(np.real(values["lam"]))
        kappa = float(np.real(values["kappa"]))
        k3 = _qn_float(qn, "omega_ax")
        if sigma * lam != 0:
            raise UnsupportedError("System 7 separates in cylindrical variables only when sigma*lam = 0")
        if lam == 0:
            m = _qn_int(qn, "kappa_ang", spec.id)
            return [("radial", _cylindrical_radial(7, sigma + 2, m, k3, f"{kappa}*rt**({sigma} + 1)", values))]
        energy = _require_energy(qn, spec.id)
        return [
            ("angular", _angular_exponential("angular", str(lam), "0", energy, values)),
            ("radial", _scaled_angular_radial(k3, values)),
        ]

    if spec.id == 8:
        k3 = _qn_float(qn, "omega_ax")
        angular = make_problem(
            "angular", "phi", "1", "lam**2*phi**2 + 2*mu*phi", "1", (0.0, 2 * math.pi), values,
            eigen_symbol="Lambda", eigen_scale=None, note="Φ on [0, 2π]; Λ shared with the radial equation",
        )
        radial = make_problem(
            f"radial k3={k3:g}", "rt", "rt**3", f"{k3**2}*rt**3 + 2*nu*rt*log(rt)", "rt",
            (0.0, math.inf), values, left=Endpoint.SINGULAR, right=Endpoint.SINGULAR,
            eigen_symbol="2E-Lambda", eigen_scale=None,
            note="eigenvalue is 2E − Λ",
        )
        return [("angular", angular), ("radial", radial)]

    if spec.id == 9:
        energy = _require_energy(qn, spec.id)
        angular = _angular_exponential(
            "angular", "sigma", "omega**2*exp(-sigma*phi)", energy, values
        )
        return [("angular", angular), ("radial", _scaled_angular_radial(_qn_float(qn, "omega_ax"), values))]

    raise UnsupportedError(f"No reduction for system {spec.id}")


def _require_energy(qn: QuantumNumbers, system: int) -> float:
    if qn.energy is None:
        raise DomainError(f"System {system} needs the energy E as a coupling (qn energy=...)")
    return float(qn.energy)


def deformed_oscillator_delta(sigma: float, kappa: float) -> float:
    """δ = ¾(σ+1)(σ+3) + 2κ of the oscillator form of system 11."""
    return 0.75 * (sigma + 1) * (sigma + 3) + 2 * kappa


def liouville_power(problem: SLProblem, sigma: float) -> SLProblem:
    """System 11 radial problem in z = r^(−σ): −σ² v″ + [(L+δ)/z² + ω²z²] v = 2E v.

    The radial function is recovered as R = z^((σ+3)/(2σ)) v.
    """
    if sigma == 0:
        raise DomainError("liouville_power needs sigma != 0")
    if problem.variable != "r":
        raise DomainError("liouville_power expects a radial problem in r")
    z = change_variable(problem.rescaled(2.0), "z", f"z**(-1/{sigma!r})", (0.0, math.inf))
    normal = liouville_normal_form(z).rescaled(sigma**2)
    return normal.model_copy(
        update={
            "label": f"{problem.label} oscillator",
            "left": Endpoint.SINGULAR,
            "right": Endpoint.SINGULAR,
            "eigen_symbol": "2E",
            "center": 0.0,
            "window": 8.0 * math.sqrt(abs(sigma)),
            "note": "deformed oscillator in z = r^(-sigma)",
        }
    )


def coupling_problem(spec: SystemSpec, validated: ValidatedParams, qn: QuantumNumbers) -> SLProblem:
    """System 11 with E as coupling: −(r^{s+4}R′)′ + (ω² r^{2−s} + μ r²)R = ε r^{s+2} R.

    s = 2σ is the mass exponent, μ = −2E and ε = −l(l+1) − 2κ.
    """
    if spec.id != 11:
        raise DomainError("The coupling-constant problem is defined for system 11")
    energy = _require_energy(qn, spec.id)
    values = validated.values()
    sigma = float(np.real(values["sigma"]))
    omega = abs(complex(values["omega"]))
    if sigma == 0 or omega == 0:
        raise DomainError("The coupling-constant problem needs sigma != 0 and omega != 0")
    s = 2 * sigma
    return make_problem(
        f"coupling E={energy:g}", "r", f"r**({s} + 4)", f"omega**2*r**(2 - {s}) + {-2 * energy}*r**2",
        f"r**({s} + 2)", (0.0, math.inf), values, left=Endpoint.SINGULAR, right=Endpoint.SINGULAR,
        eigen_symbol="eps", eigen_scale=None, note="ε = −l(l+1) − 2κ, μ = −2E",
        constants={"s": s, "omega": omega, "mu": -2 * energy},
    )


def liouville_log(problem: SLProblem) -> SLProblem:
    """r → ρ = ln r on the coupling problem: Morse form with ε̂ = ε − ((s+3)/2)².

    The result is −v″ + [ω² e^{−2sρ} + μ e^{−sρ}] v = ε̂ v, that is ν = −μ/(2ω) − s/2
    in the attractive convention of `morse_problem`.
    """
    if problem.variable != "r" or problem.a != 0.0 or math.isfinite(problem.b):
        raise DomainError("liouville_log expects a problem in r on (0, ∞)")
    s = problem.constants.get("s", 0.0)
    omega = problem.constants.get("omega", 0.0)
    if s == 0 or omega == 0:
        raise DomainError("liouville_log needs omega != 0 and sigma != 0")
    mu = problem.constants.get("mu", 0.0)
    # Well bottom where e^{−sρ} = −μ/(2ω²)
    centre = -math.log(-mu / (2 * omega**2)) / s if mu < 0 else 0.0
    rho = change_variable(problem, "rho", "exp(rho)", (-math.inf, math.inf), center=centre, window=12.0 / abs(s))
    normal = liouville_normal_form(rho, absorb_constant=True, label=f"{problem.label} morse")
    return normal.model_copy(update={"eigen_symbol": "eps_hat", "left": Endpoint.SINGULAR, "right": Endpoint.SINGULAR})


def morse_coupling(nu: float, sigma: float, omega: float) -> float:
    """Strength of the attractive e^{−σρ} term, 2|ω|ν + |ω|σ."""
    return 2 * abs(omega) * nu + abs(omega) * sigma


def morse_problem(nu: float, sigma: float, omega: float) -> SLProblem:
    """−v″ + [ω² e^{−2σρ} − (2|ω|ν + |ω|σ) e^{−σρ}] v = ε̂ v on the real line."""
    if omega == 0 or sigma <= 0:
        raise DomainError("Morse problem needs omega != 0 and sigma > 0")
    b = morse_coupling(nu, sigma, omega)
    # Well bottom where e^{−σρ} = b/(2ω²)
    centre = -math.log(b / (2 * omega**2)) / sigma if b > 0 else 0.0
    return make_problem(
        f"morse nu={nu:g} sigma={sigma:g}", "rho", "1",
        f"{omega**2}*exp(-2*{sigma}*rho) - {b}*exp(-{sigma}*rho)", "1",
        (-math.inf, math.inf), left=Endpoint.SINGULAR, right=Endpoint.SINGULAR,
        eigen_symbol="eps_hat", eigen_scale=None, center=centre, window=12.0 / sigma,
    )


def solver_forms(
    spec: SystemSpec, validated: ValidatedParams, qn: QuantumNumbers
) -> List[Tuple[str, SLProblem]]:
    """Reductions rewritten in the coordinates used for the numerical eigen-solve."""
    out: List[Tuple[str, SLProblem]] = []
    values = validated.values()
    for label, problem in reduce(spec, validated, qn):
        out.append((label, _solver_form(spec, values, qn, label, problem)))
    return out


def _solver_form(
    spec: SystemSpec, values: Mapping[str, complex], qn: QuantumNumbers, label: str, problem: SLProblem
) -> SLProblem:
    if spec.id == 1:
        s = change_variable(problem, "s", "tan(s/sqrt(2))", (0.0, math.pi / math.sqrt(2)))
        return liouville_normal_form(s, label=f"{problem.label} in s")
    if spec.id == 2:
        s = change_variable(problem, "s", "tanh(s/sqrt(2))", (0.0, math.inf), center=0.0, window=8.0)
        normal = liouville_normal_form(s, label=f"{problem.label} in s")
        return normal.model_copy(update={"continuum": True})
    if spec.id == 10:
        lam = abs(complex(values["lam"]))
        nu = float(np.real(values["nu"]))
        centre = -math.sqrt(2) * nu / lam**2 if lam > 0 else 0.0
        width = 10.0 / math.sqrt(lam) if lam > 0 else 20.0
        y = change_variable(problem, "y", "exp(y/sqrt(2))", (-math.inf, math.inf), centre, width)
        normal = liouville_normal_form(y, label=f"{problem.label} in y")
        return normal.model_copy(update={"continuum": lam == 0})
    if spec.id == 11:
        sigma = float(np.real(values["sigma"]))
        omega = abs(complex(values["omega"]))
        out = liouville_power(problem, sigma)
        return out.model_copy(update={"window": 8.0 * math.sqrt(abs(sigma) / omega)})
    if spec.id == 3:
        k = math.sqrt(_qn_float(qn, "k1") ** 2 + _qn_float(qn, "k2") ** 2)
        nu = float(np.real(values["nu"]))
        centre = -math.log(k) if k > 0 else 0.0
        y = change_variable(problem, "y", "exp(y)", (-math.inf, math.inf), centre, 10.0)
        normal = liouville_normal_form(y, absorb_constant=True, label=f"{problem.label} in y")
        return normal.model_copy(
            update={"eigen_symbol": "E_tilde", "continuum": nu >= 0 or k == 0}
        )
    if problem.variable in ("x3", "x1", "rt") and problem.right is Endpoint.SINGULAR:
        return change_variable(problem, "y", "exp(y)", (-math.inf, math.inf), 0.0, 10.0).model_copy(
            update={"label": f"{problem.label} in y"}
        )
    if problem.variable == "phi" and problem.eigen_symbol == "E_hat":
        return liouville_normal_form(problem, label=f"{problem.label} normal")
    return problem
