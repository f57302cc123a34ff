"""
Exception hierarchy for the integrating-method solver.
"""

from typing import Optional


class IntegratingError(Exception):
    """Base class for every error raised by this package."""


class EvaluationError(IntegratingError, ValueError):
    """A user callback returned a non-finite value."""

    def __init__(self, message: str, point: float):
        super().__init__(f"{message} (at {point!r})")
        self.point = point


class CapExceededError(IntegratingError, RuntimeError):
    """A streaming scan ran past its node cap without reaching the target."""

    def __init__(self, node_cap: int, reached: float, target: float):
        super().__init__(
            f"Scan exceeded node cap {node_cap} with sum {reached!r} < target {target!r}; "
            "the target may lie beyond the extension limit of the solution"
        )
        self.node_cap = node_cap
        self.reached = reached
        self.target = target


class UnsolvableProblemError(IntegratingError, ValueError):
    """The reduced abscissa lies at or beyond the extension limit."""


class InvalidReductionError(IntegratingError, ValueError):
    """tau(b) is not positive, so g cannot be positive on (0, b)."""


class InvalidIntegrandError(IntegratingError, ValueError):
    """The integrand is non-positive where a refinement criterion divides by it."""


class ContractViolationError(IntegratingError, ValueError):
    """A caller-side precondition does not hold."""


class IntegratingConditionError(IntegratingError, ValueError):
    """The sampling screen found a violated integrating condition."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class OracleFailure(IntegratingError, RuntimeError):
    """The reference solver could not produce a trustworthy value."""


class DivergenceError(IntegratingError, ArithmeticError):
    """The classical step solver produced a non-finite state."""


class ConfigError(IntegratingError, ValueError):
    """An experiment configuration could not be parsed or validated."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = f"[{', '.join(location)}] " if location else ""
        super().__init__(f"{prefix}{message}")
        self.field = field
        self.line = line


class ConvergenceError(IntegratingError, RuntimeError):
    """The refinement loop ran far past its theoretical termination index."""
