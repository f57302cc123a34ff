"""
Experiment engine: presets, configuration merging, per-node solving and result emission.
"""

import io
import os
import sys
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Dict, List, Optional, TextIO, Tuple

import pandas as pd
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

# Load environment variables from .env file
try:
    from dotenv import load_dotenv
    load_dotenv()
except ImportError:
    pass  # python-dotenv not installed, continue without it

from errors import ConfigError, IntegratingError
from models import (
    Algorithm,
    ExperimentConfig,
    ExperimentReport,
    ExperimentRow,
    OutputFormat,
    ReducedProblem,
    ReferenceSolution,
    SeparableProblem,
    SolveReport,
)
from oracle import BUILTIN_PROBLEMS, builtin_mesh, builtin_reference, classical_step_solver, integrand_problem, RK4_STAGES
from problem import reduce, reduce_mesh, reduced_abscissa, validate_conditions
from solver import algorithm1, algorithm2, certify, mesh_solve
from utils import build_mesh, ensure_output_dir, env_int, format_display, load_config_file

logger = logging.getLogger(__name__)

_TABLE_SETUP = {"eps": 1e-4, "h1_factor": 2.0, "variant": "midpoint"}

PRESETS: Dict[str, Dict[str, Any]] = {
    "table1": {"problem": "linear", "algorithm": "one", **_TABLE_SETUP},
    "table2": {"problem": "riccati", "algorithm": "one", **_TABLE_SETUP},
    "table3": {"problem": "linear", "algorithm": "mesh", **_TABLE_SETUP},
    "table4": {"problem": "riccati", "algorithm": "mesh", **_TABLE_SETUP},
}

COLUMNS = ["x", "y", "y_display", "err_e4", "j_used", "j_n", "j_s", "evals", "y_lo", "y_hi", "certified", "error"]
INTEGER_COLUMNS = ["j_used", "j_n", "j_s", "evals"]


def resolve_config(
    preset: Optional[str] = None,
    config_path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> ExperimentConfig:
    """
    Merge environment defaults, a preset, a config file and explicit overrides, in that order.

    Args:
        preset: Preset name (table1..table4)
        config_path: Flat key = value config file
        overrides: Values from command-line flags; None entries are ignored

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigError: On unknown presets, bad files or invalid combined values
    """
    merged: Dict[str, Any] = {
        "node_cap": env_int("INTEGRATING_NODE_CAP", 10**8),
        "workers": env_int("INTEGRATING_WORKERS", 1),
    }
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset (known: {', '.join(sorted(PRESETS))})", field="preset")
        merged.update(PRESETS[preset])
    if config_path:
        merged.update(load_config_file(config_path))
    if overrides:
        merged.update({key: value for key, value in overrides.items() if value is not None})

    try:
        return ExperimentConfig(**merged)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first.get("loc", ())) or None
        raise ConfigError(first.get("msg", str(e)), field=field) from e


class ExperimentRunner:
    """Runs one experiment configuration and produces rows in mesh order."""

    def __init__(self, config: ExperimentConfig):
        """
        Initialize the runner.

        Args:
            config: Resolved experiment configuration
        """
        self.config = config
        self.problem, self.reference = self._resolve_problem()
        self.mesh = self._resolve_mesh()
        if not math.isclose(self.mesh[-1], self.problem.b, rel_tol=1e-12):
            self.problem = self.problem.model_copy(update={"b": self.mesh[-1]})

    def _resolve_problem(self) -> Tuple[SeparableProblem, Optional[ReferenceSolution]]:
        cfg = self.config
        if cfg.problem:
            if cfg.problem not in BUILTIN_PROBLEMS:
                raise ConfigError(f"unknown problem (known: {', '.join(sorted(BUILTIN_PROBLEMS))})", field="problem")
            if cfg.y0 is not None:
                raise ConfigError("y0 of a built-in problem is fixed", field="y0")
            return builtin_reference(cfg.problem)

        b = cfg.b
        if b is None:
            mesh = self._explicit_mesh()
            if not mesh:
                raise ConfigError("inline problems need b or a mesh", field="b")
            b = mesh[-1]
        try:
            return integrand_problem(cfg.integrand, cfg.y0, b)
        except ValueError as e:
            raise ConfigError(str(e), field="integrand") from e

    def _explicit_mesh(self) -> Optional[List[float]]:
        cfg = self.config
        if cfg.mesh is not None:
            return list(cfg.mesh)
        if cfg.mesh_step is not None:
            return build_mesh(cfg.mesh_step, cfg.mesh_count)
        return None

    def _resolve_mesh(self) -> List[float]:
        cfg = self.config
        mesh = self._explicit_mesh()
        if mesh is None:
            if cfg.b is not None:
                mesh = [cfg.b]
            elif cfg.problem:
                mesh = builtin_mesh(cfg.problem)
            else:
                mesh = [self.problem.b]
        if cfg.b is not None and not math.isclose(mesh[-1], cfg.b, rel_tol=1e-12):
            raise ConfigError(f"mesh ends at {mesh[-1]!r}, not at b = {cfg.b!r}", field="mesh")
        if any(x <= 0 for x in mesh) or any(r <= l for l, r in zip(mesh, mesh[1:])):
            raise ConfigError("mesh must be positive and strictly increasing", field="mesh")
        return mesh

    def _reference_error(self, x: float, y: Optional[float]) -> Optional[float]:
        if self.reference is None or y is None or not x < self.reference.valid_until:
            return None
        return abs(self.reference.y_of_x(x) - y) * 1e4

    def _solve_node(self, rp: ReducedProblem, x: float) -> ExperimentRow:
        cfg = self.config
        node_rp = rp.model_copy(update={"b_reduced": reduced_abscissa(self.problem, x)})
        try:
            if cfg.algorithm == Algorithm.ONE:
                report: SolveReport = algorithm1(
                    node_rp, cfg.eps, variant=cfg.variant, h1_factor=cfg.h1_factor, node_cap=cfg.node_cap
                )
            else:
                report = algorithm2(
                    node_rp,
                    cfg.eps,
                    variant=cfg.variant,
                    simplified_js=cfg.simplified_js,
                    h1_factor=cfg.h1_factor,
                    node_cap=cfg.node_cap,
                )
            certificate = certify(node_rp, report.bracket, cfg.eps * cfg.h1_factor)
        except IntegratingError as e:
            logger.error(f"Node x={x!r} failed: {e}")
            return ExperimentRow(x=x, error=str(e))

        logger.debug(f"Node x={x!r}: y={report.y_b!r}, j={report.j_used}, evals={report.evals}")
        return ExperimentRow(
            x=x,
            y=report.y_b,
            y_display=format_display(report.y_b),
            err_e4=self._reference_error(x, report.y_b),
            j_used=report.j_used,
            j_n=report.j_n,
            j_s=report.j_s,
            evals=report.evals,
            y_lo=report.bracket.y_lo,
            y_hi=report.bracket.y_hi,
            certified=certificate.passed,
        )

    def _run_mesh(self, rp: ReducedProblem) -> Tuple[List[ExperimentRow], int]:
        cfg = self.config
        targets = reduce_mesh(self.problem, self.mesh)
        try:
            report = mesh_solve(
                rp,
                targets,
                cfg.eps,
                variant=cfg.variant,
                h1_factor=cfg.h1_factor,
                simplified_js=cfg.simplified_js,
                node_cap=cfg.node_cap,
            )
        except IntegratingError as e:
            logger.error(f"Mesh solve failed: {e}")
            return [ExperimentRow(x=x, error=str(e)) for x in self.mesh], 0

        rows = []
        for x, target, node in zip(self.mesh, targets, report.nodes):
            certificate = certify(rp, node.bracket, cfg.eps * cfg.h1_factor, target=target)
            rows.append(
                ExperimentRow(
                    x=x,
                    y=node.y,
                    y_display=format_display(node.y),
                    err_e4=self._reference_error(x, node.y),
                    j_used=report.j_used,
                    j_n=report.j_n,
                    j_s=report.j_s,
                    evals=report.evals,
                    y_lo=node.bracket.y_lo,
                    y_hi=node.bracket.y_hi,
                    certified=certificate.passed,
                )
            )
        return rows, report.evals

    def run(self, on_row: Optional[Callable[[ExperimentRow], None]] = None) -> ExperimentReport:
        """
        Solve every mesh node and return the rows in mesh order.

        Args:
            on_row: Called once per finished row (for progress display)

        Returns:
            ExperimentReport

        Raises:
            IntegratingError: If the problem itself cannot be reduced
        """
        cfg = self.config
        logger.info(
            f"Running {self.problem.name or cfg.integrand}: algorithm={cfg.algorithm.value}, "
            f"eps={cfg.eps!r}, h1_factor={cfg.h1_factor!r}, {len(self.mesh)} node(s)"
        )
        rp = reduce(self.problem)

        if cfg.algorithm == Algorithm.MESH:
            rows, total = self._run_mesh(rp)
            if on_row:
                for row in rows:
                    on_row(row)
        else:
            with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
                futures = [executor.submit(self._solve_node, rp, x) for x in self.mesh]
                rows = []
                for future in futures:
                    row = future.result()
                    rows.append(row)
                    if on_row:
                        on_row(row)
            total = sum(row.evals or 0 for row in rows)

        report = ExperimentReport(config=cfg, rows=rows, total_evals=total)
        logger.info(f"Finished: {len(rows)} row(s), {total} evaluations, all certified: {report.all_certified}")
        return report


def run_experiment(cfg: ExperimentConfig, on_row: Optional[Callable[[ExperimentRow], None]] = None) -> ExperimentReport:
    """Run an experiment configuration end to end."""
    return ExperimentRunner(cfg).run(on_row=on_row)


def report_to_dataframe(report: ExperimentReport) -> pd.DataFrame:
    """One record per mesh node with nullable integer columns."""
    df = pd.DataFrame([row.model_dump() for row in report.rows], columns=COLUMNS)
    for column in INTEGER_COLUMNS:
        df[column] = df[column].astype("Int64")
    return df


def render_table(report: ExperimentReport, console: Console) -> None:
    """Aligned human-readable table."""
    table = Table(title=f"Integrating method: {report.config.problem or report.config.integrand}")
    table.add_column("x", style="cyan", justify="right")
    table.add_column("y", style="green", justify="right")
    table.add_column("|err|*1e4", style="yellow", justify="right")
    table.add_column("j", justify="right")
    table.add_column("j_n", justify="right")
    table.add_column("j_s", justify="right")
    table.add_column("evals", justify="right")
    table.add_column("certified", style="magenta")

    for row in report.rows:
        if row.error:
            table.add_row(f"{row.x:g}", "[red]error[/red]", "", "", "", "", "", f"[red]{row.error}[/red]")
            continue
        table.add_row(
            f"{row.x:g}",
            row.y_display,
            f"{row.err_e4:.3f}" if row.err_e4 is not None else "N/A",
            str(row.j_used),
            str(row.j_n),
            str(row.j_s),
            f"{row.evals:,}",
            "✓" if row.certified else "✗",
        )
    console.print(table)


def emit(report: ExperimentReport, fmt: OutputFormat, path: Optional[str] = None, stream: Optional[TextIO] = None) -> None:
    """
    Write a report as a table, CSV or JSON lines.

    Args:
        report: Finished experiment report
        fmt: Output format
        path: Destination file; `stream` (default standard output) when absent
        stream: Text stream used when no path is given

    Raises:
        OSError: If the destination cannot be written
    """
    fmt = OutputFormat(fmt)
    stream = stream or sys.stdout
    if path:
        ensure_output_dir(os.path.dirname(path) or ".")

    if fmt == OutputFormat.TABLE:
        if path:
            with open(path, "w", encoding="utf-8", newline="\n") as handle:
                render_table(report, Console(file=handle, width=120, color_system=None))
        else:
            render_table(report, Console(file=stream))
        return

    if fmt == OutputFormat.CSV:
        text = report_to_dataframe(report).to_csv(index=False, lineterminator="\n")
    else:
        # shortest round-trip float repr
        text = "".join(row.model_dump_json() + "\n" for row in report.rows)

    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        logger.info(f"Wrote {len(report.rows)} record(s) to {path}")
    else:
        stream.write(text)


def emit_to_string(report: ExperimentReport, fmt: OutputFormat) -> str:
    """Render a report into a string."""
    buffer = io.StringIO()
    emit(report, fmt, stream=buffer)
    return buffer.getvalue()


def check_builtin(name: str, samples: int = 1001):
    """Screen the integrating conditions of a built-in problem over its experiment range."""
    problem, reference = builtin_reference(name)
    y_max = reference.y_of_x(problem.b)
    return validate_conditions(problem, samples=samples, y_max=y_max)


def contrast_table(
    name: str,
    eps: float = 1e-4,
    h1_factor: float = 2.0,
    step_counts: Optional[List[int]] = None,
) -> pd.DataFrame:
    """
    Endpoint error and cost of classical RK4 for doubling step counts next to the
    certified integrating-method result at the same endpoint.
    """
    problem, reference = builtin_reference(name)
    rp = reduce(problem)
    exact = reference.y_of_x(problem.b)
    step_counts = step_counts or [2**k for k in range(0, 11, 2)]

    records = []
    for steps in step_counts:
        y = classical_step_solver(rp, steps)
        records.append(
            {"method": f"rk4 ({steps} steps)", "y": y, "abs_error": abs(y - exact), "evals": RK4_STAGES * steps, "guaranteed": False}
        )
    report = algorithm2(rp, eps, variant="midpoint", h1_factor=h1_factor)
    records.append(
        {
            "method": f"integrating (eps={eps:g})",
            "y": report.y_b,
            "abs_error": abs(report.y_b - exact),
            "evals": report.evals,
            "guaranteed": certify(rp, report.bracket, eps * h1_factor).passed,
        }
    )
    return pd.DataFrame(records)
