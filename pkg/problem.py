"""
Separable problems: integrating-condition screen and reduction to an integral equation.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence

import numpy as np

from errors import (
    EvaluationError,
    IntegratingConditionError,
    InvalidReductionError,
    UnsolvableProblemError,
)
from models import ConditionCheck, ConditionReport, ReducedProblem, SeparableProblem

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 1001
CONSISTENCY_TOLERANCE = 1e-12
DERIVATIVE_TOLERANCE = 1e-6


def _sample(func: Callable[[float], float], x: float, label: str) -> float:
    try:
        value = func(x)
    except (ZeroDivisionError, OverflowError) as e:
        raise EvaluationError(f"{label} evaluation failed: {e}", x) from e
    if not math.isfinite(value):
        raise EvaluationError(f"{label} returned non-finite value {value!r}", x)
    return value


def _first(points: Sequence[float], flags: Sequence[bool]) -> Optional[float]:
    for point, ok in zip(points, flags):
        if not ok:
            return float(point)
    return None


def validate_conditions(
    prob: SeparableProblem,
    samples: int = DEFAULT_SAMPLES,
    y_max: Optional[float] = None,
) -> ConditionReport:
    """
    Screen the integrating conditions (A)-(D) at evenly spaced samples.

    This is a heuristic: it can reject a bad problem but never proves a good one.
    Conditions on y are sampled over [y0, y_max]; conditions on g over (0, b].

    Args:
        prob: Problem to screen
        samples: Number of sample points (>= 2)
        y_max: Right end of the y range (> y0)

    Returns:
        ConditionReport with one entry per condition

    Raises:
        EvaluationError: If any callback is non-finite at a sample
    """
    if samples < 2:
        raise ValueError(f"samples must be at least 2, got {samples}")
    if y_max is None or not y_max > prob.y0:
        raise ValueError(f"y_max must exceed y0={prob.y0!r}, got {y_max!r}")

    ys = np.linspace(prob.y0, y_max, samples)
    f_values = np.array([_sample(prob.f, float(y), "f") for y in ys])
    p_values = np.array([_sample(prob.p, float(y), "p") for y in ys])
    checks: List[ConditionCheck] = []

    if prob.has_g:
        zs = prob.b * np.arange(1, samples + 1) / samples
        g_values = np.array([_sample(prob.g, float(z), "g") for z in zs])

        tau_start = _sample(prob.tau, 0.0, "tau")
        steps = 1e-5 * np.maximum(1.0, np.abs(zs))
        slopes = np.array(
            [
                (_sample(prob.tau, float(z + d), "tau") - _sample(prob.tau, float(z - d), "tau")) / (2.0 * d)
                for z, d in zip(zs, steps)
            ]
        )
        slope_ok = np.abs(slopes - g_values) <= DERIVATIVE_TOLERANCE * np.maximum(np.abs(g_values), np.abs(slopes)) + 1e-12
        origin_ok = abs(tau_start) <= CONSISTENCY_TOLERANCE
        checks.append(
            ConditionCheck(
                condition="A",
                passed=bool(origin_ok and slope_ok.all()),
                first_violation=0.0 if not origin_ok else _first(zs, slope_ok),
                detail="tau(0) = 0 and tau' matches g by central differences",
            )
        )
        positive = g_values > 0
        checks.append(
            ConditionCheck(
                condition="B",
                passed=bool(positive.all()),
                first_violation=_first(zs, positive),
                detail="g(z) > 0 on (0, b]",
            )
        )
    else:
        checks.append(ConditionCheck(condition="A", passed=True, detail="g = 1, tau(z) = z"))
        checks.append(ConditionCheck(condition="B", passed=True, detail="g = 1"))

    increasing = np.concatenate(([f_values[0] > 0], f_values[1:] > f_values[:-1]))
    checks.append(
        ConditionCheck(
            condition="C",
            passed=bool(increasing.all()),
            first_violation=_first(ys, increasing),
            detail="f(y0) > 0 and f increasing",
        )
    )

    second = p_values[:-2] - 2.0 * p_values[1:-1] + p_values[2:]
    convex = second > 0
    checks.append(
        ConditionCheck(
            condition="D",
            passed=bool(convex.all()),
            first_violation=_first(ys[1:-1], convex),
            detail="second differences of 1/f are positive",
        )
    )

    consistent = np.abs(p_values * f_values - 1.0) <= CONSISTENCY_TOLERANCE
    checks.append(
        ConditionCheck(
            condition="consistency",
            passed=bool(consistent.all()),
            first_violation=_first(ys, consistent),
            detail="p(y) * f(y) = 1",
        )
    )

    report = ConditionReport(checks=checks, samples=samples, y_min=prob.y0, y_max=float(y_max))
    for failure in report.failures():
        logger.warning(f"Condition {failure.condition} failed at {failure.first_violation!r}: {failure.detail}")
    return report


def reduced_abscissa(prob: SeparableProblem, x: float) -> float:
    """Map an abscissa through tau (identity when g = 1)."""
    if not prob.has_g:
        return x
    return _sample(prob.tau, x, "tau")


def reduce(
    prob: SeparableProblem,
    y_max: Optional[float] = None,
    samples: int = DEFAULT_SAMPLES,
    waive_validation: bool = False,
) -> ReducedProblem:
    """
    Replace tau(b) by b and return the autonomous integral equation.

    Unless waived, the conditions are screened first over [y0, y_max]; by
    default y_max = y0 + f(y0)*tau(b), a segment the solution certainly covers.

    Raises:
        InvalidReductionError: If tau(b) <= 0
        UnsolvableProblemError: If tau(b) reaches the extension limit
        IntegratingConditionError: If the screen finds a violation
    """
    b_reduced = reduced_abscissa(prob, prob.b)
    if b_reduced <= 0:
        raise InvalidReductionError(f"tau(b) = {b_reduced!r} is not positive; g cannot be positive on (0, b)")
    if prob.extension_limit is not None and b_reduced >= prob.extension_limit:
        raise UnsolvableProblemError(
            f"reduced abscissa {b_reduced!r} is not below the extension limit {prob.extension_limit!r}"
        )

    if not waive_validation:
        if y_max is None:
            slope = _sample(prob.f, prob.y0, "f")
            y_max = prob.y0 + (slope if slope > 0 else 1.0) * b_reduced
        report = validate_conditions(prob, samples=samples, y_max=y_max)
        if not report.all_passed:
            names = ", ".join(check.condition for check in report.failures())
            raise IntegratingConditionError(f"integrating conditions failed: {names}", report=report)

    logger.debug(f"Reduced problem {prob.name or ''}: y0={prob.y0!r}, b_reduced={b_reduced!r}")
    return ReducedProblem(p=prob.p, y0=prob.y0, b_reduced=b_reduced)


def reduce_mesh(prob: SeparableProblem, mesh: Sequence[float]) -> List[float]:
    """Map user mesh abscissas into reduced coordinates."""
    return [reduced_abscissa(prob, float(x)) for x in mesh]


def to_separable(rp: ReducedProblem) -> SeparableProblem:
    """Express a reduced problem again as a g = 1 separable problem."""
    p = rp.p
    return SeparableProblem(f=lambda y: 1.0 / p(y), p=p, y0=rp.y0, b=rp.b_reduced)
