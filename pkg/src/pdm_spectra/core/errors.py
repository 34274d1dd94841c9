"""Exception types raised by the numerical core."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class ContractError(ValueError):
    """Caller violated a documented precondition."""


class UnsupportedError(NotImplementedError):
    """Requested configuration has no implementation (non-separable, no closed form)."""


class ConvergenceError(RuntimeError):
    """Iterative refinement did not settle."""
