"""
Streaming lower-rectangular and trapezoidal sums over the uniform grid y0 + h*i.

Every accumulation is compensated (Neumaier's variant of Kahan summation) and
every node is placed by multiplication, never by repeated addition of h.
"""

import logging
import math
from collections import deque
from typing import Callable, Iterable, List, Sequence

from errors import CapExceededError, EvaluationError
from models import Crossing, GridSum, NodeSnapshot, ScanResult

logger = logging.getLogger(__name__)

DEFAULT_NODE_CAP = 10**8
UNIT_ROUNDOFF = 2.0**-53


class CompensatedSum:
    """Running sum that carries the rounding error of every addition."""

    __slots__ = ("_sum", "_carry", "count")

    def __init__(self, value: float = 0.0):
        self._sum = float(value)
        self._carry = 0.0
        self.count = 0

    def add(self, value: float) -> None:
        total = self._sum + value
        if abs(self._sum) >= abs(value):
            self._carry += (self._sum - total) + value
        else:
            self._carry += (value - total) + self._sum
        self._sum = total
        self.count += 1

    def extend(self, values: Iterable[float]) -> None:
        for value in values:
            self.add(value)

    @property
    def value(self) -> float:
        return self._sum + self._carry


def evaluate(p: Callable[[float], float], y: float) -> float:
    """Evaluate a user callback, rejecting non-finite results."""
    try:
        value = p(y)
    except (ZeroDivisionError, OverflowError) as e:
        raise EvaluationError(f"integrand evaluation failed: {e}", y) from e
    if not math.isfinite(value):
        raise EvaluationError(f"non-finite integrand value {value!r}", y)
    return value


def rounding_bound(terms: int, magnitude: float) -> float:
    """
    Bound on the rounding carried by a compensated sum of `terms` products.

    One rounding per product h*p plus the compensated-summation bound
    2u|S| + n*u^2*|S| for sums of positive terms.
    """
    u = UNIT_ROUNDOFF
    return (3.0 * u + terms * u * u) * abs(magnitude)


def _check_grid(h: float, N: int) -> None:
    if not h > 0:
        raise ValueError(f"step h must be positive, got {h!r}")
    if N < 0:
        raise ValueError(f"node count N must be non-negative, got {N!r}")


def grid_sum(p: Callable[[float], float], y0: float, h: float, N: int) -> GridSum:
    """
    Accumulate the lower rectangular sum over N subintervals.

    Args:
        p: Integrand
        y0: Left end of the grid
        h: Uniform step
        N: Number of subintervals

    Returns:
        GridSum holding the sum and the cached endpoint values
    """
    _check_grid(h, N)
    p_first = evaluate(p, y0)
    acc = CompensatedSum()
    p_last = p_first
    for i in range(1, N + 1):
        p_last = evaluate(p, y0 + h * i)
        acc.add(h * p_last)
    return GridSum(h=h, N=N, lower=acc.value, p_first=p_first, p_last=p_last, evals=N + 1)


def lower_sum(p: Callable[[float], float], y0: float, h: float, N: int) -> float:
    """Sum of h*p(y0 + h*i) for i = 1..N."""
    return grid_sum(p, y0, h, N).lower


def correction(p: Callable[[float], float], y0: float, h: float, N: int) -> float:
    """Gap between the trapezoidal and lower sums: (h/2)*(p(y0) - p(y0 + h*N))."""
    _check_grid(h, N)
    p_first = evaluate(p, y0)
    p_last = p_first if N == 0 else evaluate(p, y0 + h * N)
    return (h / 2.0) * (p_first - p_last)


def trapezoidal_sum(p: Callable[[float], float], y0: float, h: float, N: int) -> float:
    """Trapezoidal sum, formed as lower sum plus correction from shared endpoint values."""
    return grid_sum(p, y0, h, N).trapezoidal


class GridScanner:
    """
    Streams the lower sum along y0 + h*i until it first reaches a target.

    Memory stays constant in the number of nodes: only the trailing
    `lookback + 1` nodes are retained, which is what a backstep test needs.
    """

    def __init__(
        self,
        p: Callable[[float], float],
        y0: float,
        h: float,
        node_cap: int = DEFAULT_NODE_CAP,
        lookback: int = 1,
    ):
        if not h > 0:
            raise ValueError(f"step h must be positive, got {h!r}")
        if node_cap < 1:
            raise ValueError(f"node_cap must be at least 1, got {node_cap!r}")
        if lookback < 0:
            raise ValueError(f"lookback must be non-negative, got {lookback!r}")
        self.p = p
        self.y0 = y0
        self.h = h
        self.node_cap = node_cap
        self.lookback = lookback

    def scan(self, target: float, checkpoints: Sequence[float] = ()) -> ScanResult:
        """
        Find the smallest n2 with lower sum >= target.

        Args:
            target: Value the lower sum must reach (b after reduction)
            checkpoints: Ascending intermediate targets; the first node reaching
                each one is reported in `crossings`

        Returns:
            ScanResult with n2, the two bracketing partial sums and n3

        Raises:
            CapExceededError: If n2 would exceed the node cap
            EvaluationError: If p returns a non-finite value
        """
        if not target > 0:
            raise ValueError(f"target must be positive, got {target!r}")

        p, y0, h = self.p, self.y0, self.h
        half_h = h / 2.0
        p_first = evaluate(p, y0)
        evals = 1

        lookback = self.lookback
        total = 0.0
        carry = 0.0
        lower = 0.0
        before = 0.0
        n3 = 0
        p_at_n3 = p_first
        p_before_n3 = None
        p_prev = p_first
        history = deque(maxlen=lookback + 1)
        crossings: List[Crossing] = []
        pending = 0
        i = 0

        while True:
            i += 1
            if i > self.node_cap:
                raise CapExceededError(self.node_cap, lower, target)
            p_value = evaluate(p, y0 + h * i)
            evals += 1

            # compensated add of h*p_value
            term = h * p_value
            new_total = total + term
            if abs(total) >= abs(term):
                carry += (total - new_total) + term
            else:
                carry += (term - new_total) + total
            total = new_total

            before = lower
            lower = total + carry
            history.append((i, lower, p_value))

            while pending < len(checkpoints) and lower >= checkpoints[pending]:
                if i > lookback:
                    _, back_lower, back_p = history[0]
                    back = back_lower + half_h * (p_first - back_p)
                else:
                    back = 0.0
                crossings.append(Crossing(target=checkpoints[pending], n2=i, trapezoid_back=back))
                pending += 1

            if lower + half_h * (p_first - p_value) <= target:
                n3 = i
                p_at_n3 = p_value
                p_before_n3 = p_prev
            if lower >= target:
                break
            p_prev = p_value

        logger.debug(f"Scan h={h!r}: n2={i}, n3={n3}, lower={lower!r}, target={target!r}")

        grid = GridSum(h=h, N=i, lower=lower, p_first=p_first, p_last=p_value, evals=evals)
        return ScanResult(
            n2=i,
            sum_at_n2=lower,
            sum_before=before,
            n3=n3,
            p_at_n3=p_at_n3,
            p_before_n3=p_before_n3,
            grid=grid,
            history=[NodeSnapshot(N=n, lower=s, p_value=v) for n, s, v in history],
            crossings=crossings,
        )


def scan_to_target(
    p: Callable[[float], float],
    y0: float,
    h: float,
    target: float,
    node_cap: int = DEFAULT_NODE_CAP,
) -> ScanResult:
    """Smallest n2 whose lower sum reaches `target`, streamed with constant memory."""
    return GridScanner(p, y0, h, node_cap=node_cap).scan(target)
