"""
The integrating method: iterative and two-pass solvers, refinement criteria,
mesh solving, certification and the refinement-search cost model.

All guarantees hold in exact arithmetic; the floating-point residual of the
decisive comparisons is reported with every answer.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence

from errors import ContractViolationError, ConvergenceError, InvalidIntegrandError
from models import (
    Algorithm,
    Bracket,
    Certificate,
    CostSummary,
    IterationRecord,
    MeshNode,
    MeshReport,
    ReducedProblem,
    ScanResult,
    SolveReport,
    Variant,
)
from quadrature import (
    DEFAULT_NODE_CAP,
    UNIT_ROUNDOFF,
    CapExceededError,
    CompensatedSum,
    GridScanner,
    evaluate,
    rounding_bound,
)

logger = logging.getLogger(__name__)


def _sufficient_index(p_start: float, p_before: float, p_at: float, simplified: bool) -> int:
    if not p_at > 0:
        raise InvalidIntegrandError(f"integrand must be positive at the upper node, got {p_at!r}")
    if simplified:
        bound = 0.5 * (1.0 + p_start / p_at)
    else:
        bound = 1.0 + 0.5 * (p_start - p_before) / p_at
    return max(1, math.ceil(bound))


def _necessary_index(p_start: float, p_before: float, p_at: float, simplified: bool) -> int:
    if not p_before > 0:
        raise InvalidIntegrandError(f"integrand must be positive at the node before n3, got {p_before!r}")
    if simplified:
        bound = 1.0 + (p_start - 3.0 * p_at) / (2.0 * p_before)
    else:
        bound = 1.0 + (p_start - p_before - 2.0 * p_at) / (2.0 * p_before)
    return max(1, math.floor(bound) + 1)


def compute_js(
    p: Callable[[float], float],
    y0: float,
    h1: float,
    n2_1: int,
    simplified: bool = False,
) -> int:
    """
    Smallest j that guarantees termination of the iterative algorithm.

    Uses j >= 1 + (p(y0) - p(y0 + h1*(n2 - 1))) / (2 p(y0 + h1*n2)), or with
    `simplified` the stronger j >= (1 + p(y0)/p(y0 + h1*n2)) / 2.
    """
    if n2_1 < 1:
        raise ValueError(f"n2 must be at least 1, got {n2_1}")
    return _sufficient_index(
        evaluate(p, y0),
        evaluate(p, y0 + h1 * (n2_1 - 1)),
        evaluate(p, y0 + h1 * n2_1),
        simplified,
    )


def compute_jn(
    p: Callable[[float], float],
    y0: float,
    h1: float,
    n3_1: int,
    simplified: bool = False,
) -> int:
    """
    Smallest j the iterative algorithm can possibly terminate at.

    With q = p(y0 + h1*(n3 - 1)) and r = p(y0 + h1*n3) this is the smallest
    j > 1 + (p(y0) - q - 2r) / (2q); `simplified` uses p(y0) - 3r in the
    numerator. Returns 1 when n3 = 0, where no node precedes n3.
    """
    if n3_1 < 1:
        return 1
    return _necessary_index(
        evaluate(p, y0),
        evaluate(p, y0 + h1 * (n3_1 - 1)),
        evaluate(p, y0 + h1 * n3_1),
        simplified,
    )


def find_n3(
    p: Callable[[float], float],
    y0: float,
    h: float,
    target: float,
    node_cap: int = DEFAULT_NODE_CAP,
) -> int:
    """
    Largest N whose trapezoidal sum stays <= target.

    Streams until the trapezoidal value first exceeds the target and steps back one.
    """
    if not h > 0:
        raise ValueError(f"step h must be positive, got {h!r}")
    if not target > 0:
        raise ValueError(f"target must be positive, got {target!r}")

    p_first = evaluate(p, y0)
    acc = CompensatedSum()
    for N in range(1, node_cap + 1):
        p_value = evaluate(p, y0 + h * N)
        acc.add(h * p_value)
        if acc.value + (h / 2.0) * (p_first - p_value) > target:
            return N - 1
    raise CapExceededError(node_cap, acc.value, target)


def _criteria(first: ScanResult, simplified: bool) -> tuple:
    """j_s and j_n from values cached by the first scan (no extra evaluations)."""
    j_s = _sufficient_index(first.grid.p_first, first.p_before_n2, first.grid.p_last, simplified)
    if first.n3 < 1 or first.p_before_n3 is None:
        j_n = 1
    else:
        j_n = _necessary_index(first.grid.p_first, first.p_before_n3, first.p_at_n3, False)
    return j_s, j_n


def _check_tolerance(eps: float, h1_factor: float) -> None:
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    if not h1_factor > 0:
        raise ValueError(f"h1_factor must be positive, got {h1_factor!r}")


def _report(
    rp: ReducedProblem,
    scan: ScanResult,
    j: int,
    h1: float,
    variant: Variant,
    j_n: int,
    j_s: int,
    evals: int,
    algorithm: Algorithm,
    trace: Optional[List[IterationRecord]] = None,
) -> SolveReport:
    n1, _ = scan.backstep_trapezoid(j)
    bracket = Bracket(h=scan.grid.h, n1=n1, n2=scan.n2, y0=rp.y0, tolerance=h1)
    return SolveReport(
        y_b=bracket.pick(variant),
        variant=variant,
        bracket=bracket,
        j_used=j,
        j_n=j_n,
        j_s=j_s,
        evals=evals,
        float_residual=rounding_bound(scan.n2, max(rp.b_reduced, scan.sum_at_n2)),
        algorithm=algorithm,
        trace=trace or [],
    )


def algorithm1(
    rp: ReducedProblem,
    eps: float,
    variant: Variant = Variant.MIDPOINT,
    h1_factor: float = 1.0,
    node_cap: int = DEFAULT_NODE_CAP,
) -> SolveReport:
    """
    Iterative integrating method.

    At iteration j the step is h1/j with h1 = h1_factor*eps; the scan stops at
    the first n2 whose lower sum reaches b and the iteration terminates when
    the trapezoidal sum j nodes earlier is still <= b.

    Args:
        rp: Reduced problem
        eps: Tolerance
        variant: Bracket point to return
        h1_factor: Initial step as a multiple of eps
        node_cap: Maximum nodes per scan

    Returns:
        SolveReport whose bracket has width <= h1_factor*eps

    Raises:
        CapExceededError: If a scan cannot reach b within the cap
        ConvergenceError: If iterations run far beyond j_s
    """
    _check_tolerance(eps, h1_factor)
    variant = Variant(variant)
    b = rp.b_reduced
    h1 = h1_factor * eps

    trace: List[IterationRecord] = []
    evals = 0
    j_s = j_n = 1
    j = 1
    while True:
        h = h1 / j
        scan = GridScanner(rp.p, rp.y0, h, node_cap=node_cap, lookback=j).scan(b)
        evals += scan.grid.evals
        if j == 1:
            j_s, j_n = _criteria(scan, simplified=False)
            iteration_limit = 4 * j_s + 16

        n1, trapezoid = scan.backstep_trapezoid(j)
        terminated = trapezoid <= b
        trace.append(
            IterationRecord(j=j, h=h, n2=scan.n2, n3=scan.n3, trapezoid_at_n1=trapezoid, terminated=terminated)
        )
        logger.debug(f"Algorithm 1 iteration {j}: h={h!r}, n2={scan.n2}, n1={n1}, terminated={terminated}")
        if terminated:
            break
        if j >= iteration_limit:
            raise ConvergenceError(f"no termination after {j} iterations (j_s = {j_s})")
        j += 1

    if j > j_s:
        logger.warning(f"Algorithm 1 terminated at j={j} beyond j_s={j_s}; rounding decided a comparison")
    return _report(rp, scan, j, h1, variant, j_n, j_s, evals, Algorithm.ONE, trace)


def algorithm2(
    rp: ReducedProblem,
    eps: float,
    variant: Variant = Variant.RIGHT,
    simplified_js: bool = False,
    h1_factor: float = 1.0,
    node_cap: int = DEFAULT_NODE_CAP,
) -> SolveReport:
    """
    Two-pass integrating method.

    Scans once at h1; if the one-step backstep already brackets b the answer
    comes from that scan. Otherwise j_s is computed from the first scan and a
    single second scan at h1/j_s produces the answer.
    """
    _check_tolerance(eps, h1_factor)
    variant = Variant(variant)
    b = rp.b_reduced
    h1 = h1_factor * eps

    first = GridScanner(rp.p, rp.y0, h1, node_cap=node_cap, lookback=1).scan(b)
    j_s, j_n = _criteria(first, simplified=simplified_js)
    _, trapezoid = first.backstep_trapezoid(1)
    trace = [
        IterationRecord(j=1, h=h1, n2=first.n2, n3=first.n3, trapezoid_at_n1=trapezoid, terminated=trapezoid <= b)
    ]
    if trapezoid <= b:
        logger.debug(f"Algorithm 2 finished in the first pass: n2={first.n2}")
        return _report(rp, first, 1, h1, variant, j_n, j_s, first.grid.evals, Algorithm.TWO, trace)

    j = j_s
    final = GridScanner(rp.p, rp.y0, h1 / j, node_cap=node_cap, lookback=j).scan(b)
    _, trapezoid = final.backstep_trapezoid(j)
    trace.append(
        IterationRecord(j=j, h=h1 / j, n2=final.n2, n3=final.n3, trapezoid_at_n1=trapezoid, terminated=trapezoid <= b)
    )
    if trapezoid > b:
        logger.error(f"Algorithm 2 second pass at j={j} did not bracket b; certificate will fail")
    logger.debug(f"Algorithm 2 second pass: j={j}, n2={final.n2}")
    return _report(rp, final, j, h1, variant, j_n, j_s, first.grid.evals + final.grid.evals, Algorithm.TWO, trace)


def _check_mesh(mesh: Sequence[float], b: float) -> List[float]:
    if len(mesh) == 0:
        raise ContractViolationError("mesh must not be empty")
    points = [float(x) for x in mesh]
    if points[0] <= 0:
        raise ContractViolationError(f"mesh nodes must be positive, got {points[0]!r}")
    for left, right in zip(points, points[1:]):
        if not right > left:
            raise ContractViolationError(f"mesh must be strictly increasing ({left!r} then {right!r})")
    if not math.isclose(points[-1], b, rel_tol=1e-12, abs_tol=1e-15):
        raise ContractViolationError(f"last mesh node {points[-1]!r} does not equal b = {b!r}")
    points[-1] = b
    return points


def mesh_solve(
    rp: ReducedProblem,
    mesh: Sequence[float],
    eps: float,
    variant: Variant = Variant.RIGHT,
    h1_factor: float = 1.0,
    simplified_js: bool = False,
    node_cap: int = DEFAULT_NODE_CAP,
) -> MeshReport:
    """
    Values at every mesh node from the two-pass logic aimed at the last node.

    The first scan at h1 decides the refinement index exactly as algorithm2
    does for b; the final scan records, for every node x_k, the first n2,k
    whose lower sum reaches x_k. When the first pass succeeds at b but some
    intermediate node would not be bracketed at j = 1, the scan is repeated
    at j_s so that every node keeps the tolerance guarantee.
    """
    _check_tolerance(eps, h1_factor)
    variant = Variant(variant)
    b = rp.b_reduced
    points = _check_mesh(mesh, b)
    h1 = h1_factor * eps

    first = GridScanner(rp.p, rp.y0, h1, node_cap=node_cap, lookback=1).scan(b, checkpoints=points)
    j_s, j_n = _criteria(first, simplified=simplified_js)
    evals = first.grid.evals

    first_pass_ok = all(c.trapezoid_back <= c.target for c in first.crossings)
    if first_pass_ok:
        j, final = 1, first
    else:
        j = j_s
        final = GridScanner(rp.p, rp.y0, h1 / j, node_cap=node_cap, lookback=j).scan(b, checkpoints=points)
        evals += final.grid.evals
        late = [c.target for c in final.crossings if c.trapezoid_back > c.target]
        if late:
            logger.error(f"Mesh pass at j={j} left {len(late)} node(s) unbracketed, first at x={late[0]!r}")

    h = final.grid.h
    nodes = []
    for x, crossing in zip(points, final.crossings):
        bracket = Bracket(h=h, n1=max(crossing.n2 - j, 0), n2=crossing.n2, y0=rp.y0, tolerance=h1)
        nodes.append(MeshNode(x=x, y=bracket.pick(variant), bracket=bracket))

    logger.info(f"Mesh solve: {len(nodes)} nodes, step divided by {j}, {evals} evaluations")
    return MeshReport(
        nodes=nodes,
        variant=variant,
        j_used=j,
        j_n=j_n,
        j_s=j_s,
        evals=evals,
        float_residual=rounding_bound(final.n2, max(b, final.sum_at_n2)),
    )


def certify(rp: ReducedProblem, br: Bracket, tolerance: float, target: Optional[float] = None) -> Certificate:
    """
    Recompute a bracket's inequalities with a fresh accumulation.

    Passes iff n1 < n2, trapezoidal sum at n1 <= target <= lower sum at n2,
    and the width is at most the caller's `tolerance` (h1). Failure is a
    result.
    """
    if not tolerance > 0:
        raise ValueError(f"tolerance must be positive, got {tolerance!r}")
    target = rp.b_reduced if target is None else target
    h, n1, n2 = br.h, br.n1, br.n2
    reasons: List[str] = []

    p_first = evaluate(rp.p, rp.y0)
    acc = CompensatedSum()
    lower_at_n1 = lower_at_n2 = 0.0
    p_at_n1 = p_first
    for i in range(1, max(n1, n2) + 1):
        p_value = evaluate(rp.p, rp.y0 + h * i)
        acc.add(h * p_value)
        if i == n1:
            lower_at_n1 = acc.value
            p_at_n1 = p_value
        if i == n2:
            lower_at_n2 = acc.value
    trapezoid_at_n1 = lower_at_n1 + (h / 2.0) * (p_first - p_at_n1)
    width = h * (n2 - n1)

    if not n1 < n2:
        reasons.append(f"ordering: n1={n1} is not below n2={n2}")
    if not trapezoid_at_n1 <= target:
        reasons.append(f"lower comparison: trapezoidal sum {trapezoid_at_n1!r} exceeds target {target!r}")
    if not target <= lower_at_n2:
        reasons.append(f"upper comparison: lower sum {lower_at_n2!r} is below target {target!r}")
    if not width <= tolerance * (1.0 + 4.0 * UNIT_ROUNDOFF):
        reasons.append(f"width: {width!r} exceeds tolerance {tolerance!r}")

    return Certificate(
        passed=not reasons,
        trapezoid_at_n1=trapezoid_at_n1,
        lower_at_n2=lower_at_n2,
        target=target,
        width=width,
        tolerance=tolerance,
        reasons=reasons,
    )


def bisection_cost_model(j_n: int, j_s: int, b: float, eps: float) -> CostSummary:
    """
    Rough evaluation counts for jumping straight to j_s versus bisecting on [j_n, j_s].

    C_real ~ j_s*b/eps + b/eps, C_bisection,1 ~ (j_n + j_s)/2 * b/eps + b/eps and
    C_bisection,2 adds a second bisection step on top of C_bisection,1.
    """
    if j_n > j_s:
        raise ValueError(f"j_n={j_n} must not exceed j_s={j_s}")
    if not (b > 0 and eps > 0):
        raise ValueError("b and eps must be positive")

    base = b / eps
    c_real = j_s * base + base
    first_guess = (j_n + j_s) / 2.0
    c_bisection_1 = first_guess * base + base
    c_bisection_2 = ((first_guess + j_s) / 2.0) * base + c_bisection_1
    return CostSummary(
        c_real=c_real,
        c_bisection_1=c_bisection_1,
        c_bisection_2=c_bisection_2,
        ratio_1=c_bisection_1 / c_real,
        ratio_2=c_bisection_2 / c_real,
    )
