"""Coefficient expressions: sympy trees with vectorised numpy evaluation."""
import logging
from functools import cached_property
from typing import Any, Callable, Dict, Iterable, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from .errors import DomainError

logger = logging.getLogger(__name__)

PARAMETER_NAMES: Tuple[str, ...] = ("kappa", "lam", "omega", "nu", "mu", "sigma")
SPACE_TIME: Tuple[str, ...] = ("x1", "x2", "x3", "t")

X1, X2, X3, T = sp.symbols("x1 x2 x3 t", real=True)
PARAMETERS: Dict[str, sp.Symbol] = {name: sp.Symbol(name) for name in PARAMETER_NAMES}

# Derived space-time symbols usable in expression text
R = sp.sqrt(X1**2 + X2**2 + X3**2)
RT = sp.sqrt(X1**2 + X2**2)
PHI = sp.atan2(X2, X1)

# One-dimensional reduced coordinates and their sign assumptions
COORDINATES: Dict[str, sp.Symbol] = {
    "r": sp.Symbol("r", positive=True),
    "rt": sp.Symbol("rt", positive=True),
    "z": sp.Symbol("z", positive=True),
    "x": sp.Symbol("x", positive=True),
    "x1": sp.Symbol("x1", positive=True),
    "x3": sp.Symbol("x3", positive=True),
    "s": sp.Symbol("s", real=True),
    "y": sp.Symbol("y", real=True),
    "rho": sp.Symbol("rho", real=True),
    "phi": sp.Symbol("phi", real=True),
}

Number = Union[int, float, complex]
Operand = Union["CoefficientExpr", Number, sp.Expr]


def coordinate(name: str) -> sp.Symbol:
    """Return the sympy symbol of a one-dimensional coordinate."""
    if name not in COORDINATES:
        raise DomainError(f"Unknown coordinate: {name}")
    return COORDINATES[name]


def _symbols_for(variables: Sequence[str]) -> Tuple[sp.Symbol, ...]:
    if tuple(variables) == SPACE_TIME:
        return (X1, X2, X3, T)
    return tuple(coordinate(v) for v in variables)


def namespace(variables: Sequence[str]) -> Dict[str, Any]:
    names: Dict[str, Any] = dict(PARAMETERS)
    names.update({"I": sp.I, "pi": sp.pi, "E": sp.E})
    if tuple(variables) == SPACE_TIME:
        names.update({"x1": X1, "x2": X2, "x3": X3, "t": T, "r": R, "rt": RT, "phi": PHI})
    else:
        names.update({v: coordinate(v) for v in variables})
    return names


class CoefficientExpr:
    """Immutable closed-form coefficient over a fixed tuple of variables.

    Expressions are kept as sympy trees (analytic differentiation, exact
    substitution) and compiled once to numpy for evaluation. Parameters that
    have not been substituted are passed at evaluation time; unset ones
    evaluate as NaN so that a missing value can never pass silently.
    """

    def __init__(
        self,
        expr: Union[sp.Expr, Number],
        variables: Sequence[str] = SPACE_TIME,
        source: Optional[str] = None,
        guards: Iterable[sp.Expr] = (),
    ):
        self.expr: sp.Expr = sp.sympify(expr)
        self.variables: Tuple[str, ...] = tuple(variables)
        self._source = source
        self.guards: Tuple[sp.Expr, ...] = tuple(guards)

    @classmethod
    def parse(cls, text: str, variables: Sequence[str] = SPACE_TIME) -> "CoefficientExpr":
        """Parse expression text written with the manifest grammar."""
        try:
            expr = parse_expr(
                str(text), local_dict=namespace(variables), transformations=standard_transformations
            )
        except (SyntaxError, TypeError, sp.SympifyError) as e:
            raise DomainError(f"Cannot parse coefficient '{text}': {e}") from e
        allowed = set(_symbols_for(variables)) | set(PARAMETERS.values())
        unknown = expr.free_symbols - allowed
        if unknown:
            names = ", ".join(sorted(str(s) for s in unknown))
            raise DomainError(f"Unknown symbols in '{text}': {names}")
        return cls(expr, variables, source=str(text).strip())

    @classmethod
    def constant(cls, value: Number, variables: Sequence[str] = SPACE_TIME) -> "CoefficientExpr":
        return cls(value, variables)

    @property
    def source(self) -> str:
        """Text form; the original text when parsed, sympy's printer otherwise."""
        return self._source if self._source is not None else sp.sstr(self.expr)

    @property
    def symbols(self) -> Tuple[sp.Symbol, ...]:
        return _symbols_for(self.variables)

    @property
    def free_parameters(self) -> Tuple[str, ...]:
        names = {str(s) for s in self.expr.free_symbols} & set(PARAMETER_NAMES)
        return tuple(n for n in PARAMETER_NAMES if n in names)

    def depends_on(self, variable: str) -> bool:
        """True when the expression involves the named variable."""
        symbol = self.symbols[self.variables.index(variable)]
        return symbol in self.expr.free_symbols

    def is_zero(self) -> bool:
        return bool(self.expr == 0)

    # Algebra

    def _lift(self, other: Operand) -> sp.Expr:
        if isinstance(other, CoefficientExpr):
            if other.variables != self.variables:
                raise DomainError(
                    f"Variable mismatch: {self.variables} vs {other.variables}"
                )
            return other.expr
        return sp.sympify(other)

    def _merge_guards(self, other: Operand) -> Tuple[sp.Expr, ...]:
        if isinstance(other, CoefficientExpr):
            return self.guards + other.guards
        return self.guards

    def __add__(self, other: Operand) -> "CoefficientExpr":
        return CoefficientExpr(self.expr + self._lift(other), self.variables, guards=self._merge_guards(other))

    __radd__ = __add__

    def __sub__(self, other: Operand) -> "CoefficientExpr":
        return CoefficientExpr(self.expr - self._lift(other), self.variables, guards=self._merge_guards(other))

    def __rsub__(self, other: Operand) -> "CoefficientExpr":
        return CoefficientExpr(self._lift(other) - self.expr, self.variables, guards=self.guards)

    def __mul__(self, other: Operand) -> "CoefficientExpr":
        return CoefficientExpr(self.expr * self._lift(other), self.variables, guards=self._merge_guards(other))

    __rmul__ = __mul__

    def __truediv__(self, other: Operand) -> "CoefficientExpr":
        return CoefficientExpr(self.expr / self._lift(other), self.variables, guards=self._merge_guards(other))

    def __rtruediv__(self, other: Operand) -> "CoefficientExpr":
        return CoefficientExpr(self._lift(other) / self.expr, self.variables, guards=self.guards)

    def __neg__(self) -> "CoefficientExpr":
        return CoefficientExpr(-self.expr, self.variables, guards=self.guards)

    def __pow__(self, exponent: Number) -> "CoefficientExpr":
        return CoefficientExpr(self.expr ** sp.sympify(exponent), self.variables, guards=self.guards)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoefficientExpr):
            return NotImplemented
        return self.variables == other.variables and self.expr == other.expr

    def __hash__(self) -> int:
        return hash((self.variables, self.expr))

    def __repr__(self) -> str:
        return f"CoefficientExpr({self.source!r}, variables={self.variables})"

    # Calculus and substitution

    def diff(self, variable: str, order: int = 1) -> "CoefficientExpr":
        """Analytic derivative with respect to one of the expression's variables."""
        if variable not in self.variables:
            raise DomainError(f"'{variable}' is not a variable of {self.variables}")
        symbol = self.symbols[self.variables.index(variable)]
        return CoefficientExpr(sp.diff(self.expr, symbol, order), self.variables, guards=self.guards)

    def with_params(self, values: Mapping[str, Number]) -> "CoefficientExpr":
        """Substitute numeric parameter values."""
        mapping = {PARAMETERS[k]: sp.sympify(v) for k, v in values.items() if k in PARAMETERS}
        return CoefficientExpr(
            self.expr.subs(mapping),
            self.variables,
            guards=tuple(g.subs(mapping) for g in self.guards),
        )

    def subs(self, values: Mapping[str, Number]) -> "CoefficientExpr":
        """Substitute numbers for parameters or variables by name; the variable tuple is kept."""
        mapping: Dict[sp.Symbol, sp.Expr] = {}
        for name, value in values.items():
            if name in PARAMETERS:
                mapping[PARAMETERS[name]] = sp.sympify(value)
            elif name in self.variables:
                mapping[self.symbols[self.variables.index(name)]] = sp.sympify(value)
            else:
                raise DomainError(f"'{name}' is neither a parameter nor a variable of {self.variables}")
        return CoefficientExpr(
            self.expr.subs(mapping), self.variables, guards=tuple(g.subs(mapping) for g in self.guards)
        )

    def compose(self, variable: str, inner: "CoefficientExpr") -> "CoefficientExpr":
        """Replace `variable` by `inner`, adopting the inner expression's variables."""
        symbol = self.symbols[self.variables.index(variable)]
        others = [v for v in self.variables if v != variable]
        if others:
            raise DomainError(f"compose() needs a one-variable expression, got {self.variables}")
        return CoefficientExpr(
            self.expr.subs(symbol, inner.expr),
            inner.variables,
            guards=tuple(g.subs(symbol, inner.expr) for g in self.guards) + inner.guards,
        )

    def restrict_radial(self) -> "CoefficientExpr":
        """One-variable form in r of a radially symmetric space-time expression."""
        r = coordinate("r")
        expr = self.expr.subs({X1: r, X2: 0, X3: 0})
        if T in expr.free_symbols:
            raise DomainError("Radial restriction of a time-dependent expression")
        return CoefficientExpr(expr, ("r",), guards=tuple(g.subs({X1: r, X2: 0, X3: 0}) for g in self.guards))

    # Evaluation

    @cached_property
    def _compiled(self) -> Callable[..., Any]:
        arguments = list(self.symbols) + [PARAMETERS[n] for n in PARAMETER_NAMES]
        return sp.lambdify(arguments, self.expr, modules="numpy")

    @cached_property
    def _compiled_guards(self) -> Tuple[Callable[..., Any], ...]:
        arguments = list(self.symbols) + [PARAMETERS[n] for n in PARAMETER_NAMES]
        return tuple(sp.lambdify(arguments, g, modules="numpy") for g in self.guards)

    def evaluate(
        self, *coords: Any, params: Optional[Mapping[str, Number]] = None
    ) -> np.ndarray:
        """Evaluate on broadcastable coordinate arrays, one per variable."""
        if len(coords) != len(self.variables):
            raise DomainError(f"Expected {len(self.variables)} coordinates, got {len(coords)}")
        params = params or {}
        values = [params.get(n, np.nan) for n in PARAMETER_NAMES]
        arrays = [np.asarray(c, dtype=float) for c in coords]
        shape = np.broadcast_shapes(*(a.shape for a in arrays))
        with np.errstate(all="ignore"):
            for guard in self._compiled_guards:
                g = np.real(np.asarray(guard(*arrays, *values)))
                if np.any(~(g > 0)):
                    raise DomainError(f"Positivity guard violated for {self.source}")
            out = np.asarray(self._compiled(*arrays, *values))
        return np.broadcast_to(out, shape)

    def evaluate_real(
        self, *coords: Any, params: Optional[Mapping[str, Number]] = None, what: str = "coefficient"
    ) -> np.ndarray:
        """Evaluate and require a finite real result."""
        values = self.evaluate(*coords, params=params)
        if np.iscomplexobj(values):
            scale = 1.0 + float(np.max(np.abs(values.real), initial=0.0))
            if float(np.max(np.abs(values.imag), initial=0.0)) > 1e-12 * scale:
                raise DomainError(f"{what} {self.source} is not real")
            values = values.real
        values = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise DomainError(f"{what} {self.source} is not finite on the requested points")
        return values


def one_dimensional(text: str, variable: str) -> CoefficientExpr:
    """Parse an expression of a single reduced coordinate."""
    return CoefficientExpr.parse(text, (variable,))
