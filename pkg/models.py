"""
Pydantic models for problems, scans, solve reports and experiment configuration.
"""

import math
from enum import Enum
from typing import Callable, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

RealFunction = Callable[[float], float]


class Variant(str, Enum):
    """Which point of a certified bracket is returned as the answer."""

    LEFT = "left"
    RIGHT = "right"
    MIDPOINT = "midpoint"


class Algorithm(str, Enum):
    """Solve strategy used by an experiment."""

    ONE = "one"
    TWO = "two"
    MESH = "mesh"


class OutputFormat(str, Enum):
    TABLE = "table"
    CSV = "csv"
    JSONL = "jsonl"


class SeparableProblem(BaseModel):
    """Initial value problem dy/dx = f(y)*g(x), y(0) = y0, solved at x = b."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    f: RealFunction = Field(..., description="Right-hand-side factor depending on y")
    p: Optional[RealFunction] = Field(None, description="Reciprocal integrand 1/f; derived from f when omitted")
    g: Optional[RealFunction] = Field(None, description="Right-hand-side factor depending on x; absent means g = 1")
    tau: Optional[RealFunction] = Field(None, description="Exact antiderivative of g with tau(0) = 0")
    y0: float = Field(..., description="Initial value y(0)")
    b: float = Field(..., gt=0, description="Target abscissa")
    extension_limit: Optional[float] = Field(
        None, description="Value of the integral of p over [y0, +inf) when it is finite"
    )
    name: Optional[str] = Field(None, description="Registry name, if built in")

    @model_validator(mode="before")
    @classmethod
    def _derive_reciprocal(cls, data):
        if isinstance(data, dict) and data.get("p") is None and data.get("f") is not None:
            f = data["f"]
            data = dict(data)
            data["p"] = lambda y: 1.0 / f(y)
        return data

    @model_validator(mode="after")
    def _check_g_and_tau(self):
        if (self.g is None) != (self.tau is None):
            raise ValueError("g and tau must be supplied together")
        if self.extension_limit is not None and self.extension_limit <= 0:
            raise ValueError("extension_limit must be positive")
        return self

    @property
    def has_g(self) -> bool:
        return self.g is not None


class ReducedProblem(BaseModel):
    """Autonomous integral equation: integral of p over [y0, y(b)] equals b_reduced."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    p: RealFunction = Field(..., description="Positive, decreasing, convex integrand")
    y0: float = Field(..., description="Lower integration limit")
    b_reduced: float = Field(..., gt=0, description="Right-hand side tau(b), or b when g = 1")

    @model_validator(mode="after")
    def _check_start(self):
        try:
            start = self.p(self.y0)
        except ZeroDivisionError as e:
            raise ValueError(f"p is undefined at y0={self.y0!r}") from e
        if not (math.isfinite(start) and start > 0):
            raise ValueError(f"p(y0) must be positive and finite, got {start!r}")
        return self


class ConditionCheck(BaseModel):
    """Outcome of one integrating-condition screen."""

    condition: str = Field(..., description="Condition label: A, B, C, D or consistency")
    passed: bool = Field(..., description="Whether every sample satisfied the condition")
    first_violation: Optional[float] = Field(None, description="First sample point violating it")
    detail: str = Field("", description="Human-readable description of the check")


class ConditionReport(BaseModel):
    """Per-condition result of the sampling screen (a heuristic, not a proof)."""

    checks: List[ConditionCheck] = Field(..., description="Individual condition results")
    samples: int = Field(..., description="Number of sample points")
    y_min: float = Field(..., description="Left end of the screened y range")
    y_max: float = Field(..., description="Right end of the screened y range")

    @property
    def all_passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def get(self, condition: str) -> ConditionCheck:
        for check in self.checks:
            if check.condition == condition:
                return check
        raise KeyError(condition)

    def failures(self) -> List[ConditionCheck]:
        return [check for check in self.checks if not check.passed]


class GridSum(BaseModel):
    """Snapshot of a lower-rectangular accumulation over y0 + h*i, i = 1..N."""

    model_config = ConfigDict(frozen=True)

    h: float = Field(..., gt=0)
    N: int = Field(..., ge=0)
    lower: float = Field(..., description="Lower rectangular sum")
    p_first: float = Field(..., description="Cached p(y0)")
    p_last: float = Field(..., description="Cached p(y0 + h*N)")
    evals: int = Field(..., ge=0, description="Cumulative p evaluations")

    @property
    def correction(self) -> float:
        return (self.h / 2.0) * (self.p_first - self.p_last)

    @property
    def trapezoidal(self) -> float:
        return self.lower + self.correction


class NodeSnapshot(BaseModel):
    """Partial lower sum and integrand value retained at one node."""

    model_config = ConfigDict(frozen=True)

    N: int
    lower: float
    p_value: float


class Crossing(BaseModel):
    """First node at which the lower sum reached an intermediate checkpoint."""

    model_config = ConfigDict(frozen=True)

    target: float
    n2: int = Field(..., ge=1)
    trapezoid_back: float = Field(..., description="Trapezoidal sum at the node `lookback` steps earlier")


class ScanResult(BaseModel):
    """Outcome of one streaming scan to the first node whose lower sum reaches the target."""

    model_config = ConfigDict(frozen=True)

    n2: int = Field(..., ge=1, description="Smallest N with lower sum >= target")
    sum_at_n2: float
    sum_before: float
    n3: int = Field(..., ge=0, description="Largest N with trapezoidal sum <= target")
    p_at_n3: float = Field(..., description="Cached p(y0 + h*n3)")
    p_before_n3: Optional[float] = Field(None, description="Cached p(y0 + h*(n3 - 1)); absent when n3 = 0")
    grid: GridSum
    history: List[NodeSnapshot] = Field(default_factory=list, description="Trailing nodes ending at n2")
    crossings: List[Crossing] = Field(default_factory=list, description="First node reaching each checkpoint")

    @property
    def p_before_n2(self) -> float:
        """Cached p(y0 + h*(n2 - 1))."""
        return self.node(self.n2 - 1).p_value

    def backstep_trapezoid(self, steps: int) -> Tuple[int, float]:
        """
        Trapezoidal sum at n1 = n2 - steps, clamped at n1 = 0.

        Returns:
            Tuple of (n1, trapezoidal sum at n1)
        """
        n1 = self.n2 - steps
        if n1 <= 0:
            return 0, 0.0
        snapshot = self.node(n1)
        return n1, snapshot.lower + (self.grid.h / 2.0) * (self.grid.p_first - snapshot.p_value)

    def node(self, N: int) -> NodeSnapshot:
        """Return the retained snapshot for node N (N = 0 is always available)."""
        if N == 0:
            return NodeSnapshot(N=0, lower=0.0, p_value=self.grid.p_first)
        for snapshot in self.history:
            if snapshot.N == N:
                return snapshot
        raise KeyError(f"node {N} is outside the retained history")


class Bracket(BaseModel):
    """Certified enclosure [y0 + h*n1, y0 + h*n2] of the solution value."""

    model_config = ConfigDict(frozen=True)

    h: float = Field(..., gt=0)
    n1: int = Field(..., ge=0)
    n2: int = Field(..., ge=0)
    y0: float
    tolerance: float = Field(..., gt=0, description="Width bound the solver aimed for; certify takes its own")

    @model_validator(mode="after")
    def _check_order(self):
        if self.n1 >= self.n2:
            raise ValueError(f"bracket requires n1 < n2, got n1={self.n1}, n2={self.n2}")
        return self

    @property
    def y_lo(self) -> float:
        return self.y0 + self.h * self.n1

    @property
    def y_hi(self) -> float:
        return self.y0 + self.h * self.n2

    @property
    def width(self) -> float:
        return self.h * (self.n2 - self.n1)

    def pick(self, variant: Variant) -> float:
        if variant == Variant.LEFT:
            return self.y_lo
        if variant == Variant.RIGHT:
            return self.y_hi
        return (self.y_lo + self.y_hi) / 2.0


class IterationRecord(BaseModel):
    """One refinement step of the iterative algorithm."""

    j: int
    h: float
    n2: int
    n3: int
    trapezoid_at_n1: float
    terminated: bool


class SolveReport(BaseModel):
    """Answer of a single-point solve together with its diagnostics."""

    y_b: float = Field(..., description="Returned approximation of y(b)")
    variant: Variant
    bracket: Bracket
    j_used: int = Field(..., ge=1, description="Refinement index at termination")
    j_n: int = Field(..., ge=1, description="Necessary refinement index")
    j_s: int = Field(..., ge=1, description="Sufficient refinement index")
    evals: int = Field(..., ge=0, description="Total p evaluations across all scans")
    float_residual: float = Field(..., ge=0, description="Rounding bound of the decisive comparisons")
    algorithm: Algorithm
    trace: List[IterationRecord] = Field(default_factory=list)


class MeshNode(BaseModel):
    x: float
    y: float
    bracket: Bracket


class MeshReport(BaseModel):
    """Values on a user mesh from one final scan."""

    nodes: List[MeshNode]
    variant: Variant
    j_used: int = Field(..., ge=1)
    j_n: int = Field(..., ge=1)
    j_s: int = Field(..., ge=1)
    evals: int = Field(..., ge=0)
    float_residual: float = Field(..., ge=0)

    @field_validator("nodes")
    @classmethod
    def _check_increasing(cls, nodes: List[MeshNode]) -> List[MeshNode]:
        for left, right in zip(nodes, nodes[1:]):
            if not right.x > left.x:
                raise ValueError("mesh nodes must be strictly increasing in x")
        return nodes


class Certificate(BaseModel):
    """Independent recomputation of a bracket's defining inequalities."""

    passed: bool
    trapezoid_at_n1: float = Field(..., description="Lower sum plus correction at n1")
    lower_at_n2: float = Field(..., description="Lower sum at n2")
    target: float
    width: float
    tolerance: float
    reasons: List[str] = Field(default_factory=list, description="Why the certificate failed")


class CostSummary(BaseModel):
    """Rough evaluation-count model for searching the true refinement index."""

    c_real: float
    c_bisection_1: float
    c_bisection_2: float
    ratio_1: float = Field(..., description="C_bisection,1 / C_real")
    ratio_2: float = Field(..., description="C_bisection,2 / C_real")


class ReferenceSolution(BaseModel):
    """Closed-form solution paired with a built-in problem."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    y_of_x: RealFunction
    valid_until: float = Field(..., gt=0, description="Right end of the extension interval")


class ExperimentConfig(BaseModel):
    """Fully resolved configuration of one experiment run."""

    model_config = ConfigDict(
        json_schema_extra={
            "example": {
                "problem": "riccati",
                "mesh_step": 0.05,
                "mesh_count": 32,
                "eps": 1e-4,
                "h1_factor": 2,
                "algorithm": "mesh",
                "variant": "midpoint",
                "output": "csv",
            }
        }
    )

    problem: Optional[str] = Field(None, description="Built-in problem name")
    integrand: Optional[str] = Field(None, description="Registry integrand for an inline problem")
    y0: Optional[float] = Field(None, description="Initial value override")
    b: Optional[float] = Field(None, gt=0, description="Target abscissa override")
    mesh: Optional[List[float]] = Field(None, description="Explicit mesh")
    mesh_step: Optional[float] = Field(None, gt=0, description="Uniform mesh step")
    mesh_count: Optional[int] = Field(None, ge=1, description="Number of uniform mesh nodes")
    eps: float = Field(1e-4, gt=0, description="Tolerance")
    h1_factor: float = Field(1.0, gt=0, description="Initial step as a multiple of eps")
    algorithm: Algorithm = Field(Algorithm.TWO)
    variant: Variant = Field(Variant.MIDPOINT)
    output: OutputFormat = Field(OutputFormat.TABLE)
    out_path: Optional[str] = Field(None, description="Destination file; standard output when absent")
    simplified_js: bool = Field(False, description="Use the simplified sufficient criterion")
    node_cap: int = Field(10**8, ge=1)
    workers: int = Field(1, ge=1, description="Concurrent per-node solves")

    @model_validator(mode="after")
    def _check_source(self):
        if not self.problem and not self.integrand:
            raise ValueError("either problem or integrand must be given")
        if self.integrand and (self.y0 is None):
            raise ValueError("inline integrand problems need y0")
        if self.mesh is not None and len(self.mesh) == 0:
            raise ValueError("mesh must not be empty")
        if (self.mesh_step is None) != (self.mesh_count is None):
            raise ValueError("mesh_step and mesh_count must be given together")
        return self


class ExperimentRow(BaseModel):
    """One mesh node of a rendered experiment."""

    x: float
    y: Optional[float] = None
    y_display: Optional[str] = None
    err_e4: Optional[float] = Field(None, description="|y(x) - y_x| * 1e4 when a reference is known")
    j_used: Optional[int] = None
    j_n: Optional[int] = None
    j_s: Optional[int] = None
    evals: Optional[int] = None
    y_lo: Optional[float] = None
    y_hi: Optional[float] = None
    certified: bool = False
    error: Optional[str] = None


class ExperimentReport(BaseModel):
    """All rows of an experiment in mesh order."""

    config: ExperimentConfig
    rows: List[ExperimentRow]
    total_evals: int = 0

    @property
    def all_certified(self) -> bool:
        return all(row.certified for row in self.rows)
