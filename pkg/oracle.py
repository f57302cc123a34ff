"""
Reference solutions: built-in problems with closed forms, an independent
quadrature-and-root-finding inverter, and a classical fixed-step solver used
only for accuracy-versus-cost contrast.
"""

import logging
import math
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import integrate, optimize

from errors import DivergenceError, OracleFailure
from models import ReducedProblem, ReferenceSolution, SeparableProblem

logger = logging.getLogger(__name__)

ORACLE_PRECISION = 1e-12
RK4_STAGES = 4

# name -> problem definition, exact solution and the experiment mesh
BUILTIN_PROBLEMS: Dict[str, dict] = {
    "linear": {
        "description": "y' = y + 1, y(0) = 0; y(x) = exp(x) - 1",
        "f": lambda y: y + 1.0,
        "p": lambda y: 1.0 / (y + 1.0),
        "y0": 0.0,
        "b": 1.0,
        "extension_limit": None,
        "exact": lambda x: math.expm1(x),
        "valid_until": math.inf,
        "mesh_step": 0.05,
        "mesh_count": 20,
    },
    "riccati": {
        "description": "y' = y^2, y(0) = 0.5; y(x) = 1/(2 - x)",
        "f": lambda y: y * y,
        "p": lambda y: 1.0 / (y * y),
        "y0": 0.5,
        "b": 1.6,
        "extension_limit": 2.0,
        "exact": lambda x: 1.0 / (2.0 - x),
        "valid_until": 2.0,
        "mesh_step": 0.05,
        "mesh_count": 32,
    },
}


def _exp_shift_inverse(y0: float, b: float) -> float:
    # no closed form; root of the analytic antiderivative
    def residual(Y: float) -> float:
        return (math.exp(-y0) - math.exp(-Y)) + 0.1 * (Y - y0) - b

    hi = y0 + 10.0 * b + 1.0
    return optimize.brentq(residual, y0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


# name -> integrand p, its antiderivative and the analytic inverse of the integral equation
INTEGRANDS: Dict[str, dict] = {
    "inv_linear": {
        "description": "p(y) = 1/(1 + y)",
        "p": lambda y: 1.0 / (1.0 + y),
        "antiderivative": lambda y: math.log1p(y),
        "inverse": lambda y0, b: (1.0 + y0) * math.exp(b) - 1.0,
        "extension_limit": lambda y0: None,
        "domain_min": -1.0,
    },
    "inv_square": {
        "description": "p(y) = 1/y^2",
        "p": lambda y: 1.0 / (y * y),
        "antiderivative": lambda y: -1.0 / y,
        "inverse": lambda y0, b: 1.0 / (1.0 / y0 - b),
        "extension_limit": lambda y0: 1.0 / y0,
        "domain_min": 0.0,
    },
    "exp_shift": {
        "description": "p(y) = exp(-y) + 0.1",
        "p": lambda y: math.exp(-y) + 0.1,
        "antiderivative": lambda y: -math.exp(-y) + 0.1 * y,
        "inverse": _exp_shift_inverse,
        "extension_limit": lambda y0: None,
        "domain_min": -math.inf,
    },
}


def get_integrand(name: str) -> dict:
    """Retrieve a registry integrand by name."""
    entry = INTEGRANDS.get(name)
    if entry is None:
        raise ValueError(f"Unknown integrand: {name} (known: {', '.join(sorted(INTEGRANDS))})")
    return entry


def integrand_problem(name: str, y0: float, b: float) -> Tuple[SeparableProblem, ReferenceSolution]:
    """
    Build a g = 1 problem from a registry integrand, with its analytic reference.

    Args:
        name: Registry key
        y0: Initial value, inside the integrand's domain
        b: Target abscissa

    Returns:
        Tuple of (SeparableProblem, ReferenceSolution)
    """
    entry = get_integrand(name)
    if not y0 > entry["domain_min"]:
        raise ValueError(f"y0={y0!r} is outside the domain of {name} (y > {entry['domain_min']})")
    p = entry["p"]
    limit = entry["extension_limit"](y0)
    problem = SeparableProblem(
        f=lambda y: 1.0 / p(y),
        p=p,
        y0=y0,
        b=b,
        extension_limit=limit,
        name=name,
    )
    inverse = entry["inverse"]

    def y_of_x(x: float) -> float:
        return y0 if x == 0 else inverse(y0, x)

    reference = ReferenceSolution(y_of_x=y_of_x, valid_until=limit if limit is not None else math.inf)
    return problem, reference


def builtin_reference(name: str) -> Tuple[SeparableProblem, ReferenceSolution]:
    """
    Return a built-in problem and its closed-form solution.

    Raises:
        ValueError: If the name is not registered
    """
    entry = BUILTIN_PROBLEMS.get(name)
    if entry is None:
        raise ValueError(f"Unknown problem: {name} (known: {', '.join(sorted(BUILTIN_PROBLEMS))})")
    problem = SeparableProblem(
        f=entry["f"],
        p=entry["p"],
        y0=entry["y0"],
        b=entry["b"],
        extension_limit=entry["extension_limit"],
        name=name,
    )
    return problem, ReferenceSolution(y_of_x=entry["exact"], valid_until=entry["valid_until"])


def builtin_mesh(name: str) -> List[float]:
    """Experiment mesh x_k = step*k, k = 1..count, of a built-in problem."""
    if name not in BUILTIN_PROBLEMS:
        raise ValueError(f"Unknown problem: {name}")
    entry = BUILTIN_PROBLEMS[name]
    return [entry["mesh_step"] * k for k in range(1, entry["mesh_count"] + 1)]


def invert_integral(
    p: Callable[[float], float],
    y0: float,
    b: float,
    precision: float = ORACLE_PRECISION,
    max_doublings: int = 64,
) -> float:
    """
    Solve integral_{y0}^{Y} p = b for Y with adaptive quadrature and Brent's method.

    The root is first bracketed by doubling the search width; quadrature error
    estimates larger than `precision` abort instead of returning a doubtful value.

    Raises:
        OracleFailure: If no bracket is found or quadrature cannot meet the precision
    """
    if b < 0:
        raise ValueError(f"b must be non-negative, got {b!r}")
    if b == 0:
        return y0

    def residual(Y: float) -> float:
        value, abserr = integrate.quad(p, y0, Y, epsabs=precision * 1e-2, epsrel=1e-14, limit=200)
        if not math.isfinite(value) or abserr > precision:
            raise OracleFailure(f"quadrature on [{y0!r}, {Y!r}] reached error {abserr!r} > {precision!r}")
        return value - b

    width = max(1.0, abs(y0)) * 1e-3
    lo = y0
    for _ in range(max_doublings):
        hi = y0 + width
        if residual(hi) >= 0:
            break
        lo = hi
        width *= 2.0
    else:
        raise OracleFailure(f"could not bracket the root of integral = {b!r} from y0 = {y0!r}")

    try:
        root = optimize.brentq(residual, lo, hi, xtol=precision * 1e-2, rtol=4 * np.finfo(float).eps, maxiter=200)
    except (RuntimeError, ValueError) as e:
        raise OracleFailure(f"root finding failed: {e}") from e
    logger.debug(f"invert_integral: y0={y0!r}, b={b!r} -> {root!r}")
    return root


def classical_step_solver(rp: ReducedProblem, steps: int, b: Optional[float] = None) -> float:
    """
    Classical fourth-order Runge-Kutta on dy/dx = 1/p(y) with uniform step b/steps.

    Carries no tolerance guarantee; its error is O(h^4).

    Raises:
        DivergenceError: If the state becomes non-finite
    """
    if steps < 1:
        raise ValueError(f"steps must be at least 1, got {steps}")
    b = rp.b_reduced if b is None else b
    dt = b / steps

    def rhs(y: float) -> float:
        try:
            value = 1.0 / rp.p(y)
        except (ZeroDivisionError, OverflowError) as e:
            raise DivergenceError(f"right-hand side undefined at y={y!r}") from e
        if not math.isfinite(value):
            raise DivergenceError(f"non-finite slope {value!r} at y={y!r}")
        return value

    y = rp.y0
    for step in range(steps):
        k1 = rhs(y)
        k2 = rhs(y + k1 * dt / 2)
        k3 = rhs(y + k2 * dt / 2)
        k4 = rhs(y + k3 * dt)
        y += (k1 + 2 * k2 + 2 * k3 + k4) * dt / 6
        if not math.isfinite(y):
            raise DivergenceError(f"state diverged at step {step + 1} of {steps}")
    return y
