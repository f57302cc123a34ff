#!/usr/bin/env python3
"""
Command-line interface for the integrating-method solver.
"""

import sys
import time
import argparse
import logging
from typing import Any, Dict

from rich.console import Console
from rich.table import Table
from rich.progress import Progress, SpinnerColumn, TextColumn, BarColumn
from rich.panel import Panel
from rich.text import Text

from errors import ConfigError, IntegratingError
from experiment import PRESETS, ExperimentRunner, check_builtin, contrast_table, emit, resolve_config
from models import Algorithm, ConditionReport, ExperimentReport, OutputFormat, Variant
from oracle import BUILTIN_PROBLEMS, INTEGRANDS
from solver import bisection_cost_model
from utils import parse_mesh

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

console = Console(stderr=True)

EXIT_OK = 0
EXIT_UNCERTIFIED = 1
EXIT_CONFIG = 2


def create_parser() -> argparse.ArgumentParser:
    """Create command-line argument parser."""
    parser = argparse.ArgumentParser(
        description="Integrating method - guaranteed-tolerance solver for separable initial value problems",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Reproduce a published table
  python cli.py solve --preset table2

  # Two-pass solve of an inline problem, written as CSV
  python cli.py solve --integrand inv_square --y0 0.5 --b 1.5 --eps 1e-6 --output csv --out-path run.csv

  # Screen the integrating conditions of a built-in problem
  python cli.py check --problem riccati

  # Cost of bisecting for the refinement index versus jumping to j_s
  python cli.py cost --j-n 13 --j-s 14 --b 1.6 --eps 1e-4

  # Classical Runge-Kutta versus the integrating method
  python cli.py contrast --problem riccati
        """
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--verbose', '-v', action='store_true', help='Enable debug logging')

    subparsers = parser.add_subparsers(dest='command', help='Available commands')

    solve_parser = subparsers.add_parser('solve', parents=[common], help='Run an experiment')
    solve_parser.add_argument('--preset', choices=sorted(PRESETS), help='Named experiment preset')
    solve_parser.add_argument('--config', help='Flat key = value config file')
    solve_parser.add_argument('--problem', choices=sorted(BUILTIN_PROBLEMS), help='Built-in problem')
    solve_parser.add_argument('--integrand', choices=sorted(INTEGRANDS), help='Registry integrand for an inline problem')
    solve_parser.add_argument('--y0', type=float, help='Initial value of an inline problem')
    solve_parser.add_argument('--b', type=float, help='Target abscissa')
    solve_parser.add_argument('--eps', type=float, help='Tolerance')
    solve_parser.add_argument('--h1-factor', type=float, help='Initial step as a multiple of eps')
    solve_parser.add_argument('--algorithm', choices=[a.value for a in Algorithm], help='Solve strategy')
    solve_parser.add_argument('--variant', choices=[v.value for v in Variant], help='Bracket point returned')
    solve_parser.add_argument('--mesh', help='Explicit mesh, comma separated')
    solve_parser.add_argument('--mesh-step', type=float, help='Uniform mesh step')
    solve_parser.add_argument('--mesh-count', type=int, help='Number of uniform mesh nodes')
    solve_parser.add_argument('--output', choices=[o.value for o in OutputFormat], help='Output format')
    solve_parser.add_argument('--out-path', help='Output file (standard output when omitted)')
    solve_parser.add_argument('--simplified-js', action='store_true', default=None,
                              help='Use the simplified sufficient criterion')
    solve_parser.add_argument('--node-cap', type=int, help='Maximum nodes per scan')
    solve_parser.add_argument('--workers', type=int, help='Concurrent per-node solves')

    check_parser = subparsers.add_parser('check', parents=[common], help='Screen the integrating conditions')
    check_parser.add_argument('--problem', required=True, choices=sorted(BUILTIN_PROBLEMS), help='Built-in problem')
    check_parser.add_argument('--samples', type=int, default=1001, help='Sample points')

    cost_parser = subparsers.add_parser('cost', parents=[common], help='Refinement-search cost model')
    cost_parser.add_argument('--j-n', type=int, required=True, help='Necessary refinement index')
    cost_parser.add_argument('--j-s', type=int, required=True, help='Sufficient refinement index')
    cost_parser.add_argument('--b', type=float, required=True, help='Reduced abscissa')
    cost_parser.add_argument('--eps', type=float, required=True, help='Tolerance')

    contrast_parser = subparsers.add_parser('contrast', parents=[common], help='Classical Runge-Kutta versus the integrating method')
    contrast_parser.add_argument('--problem', required=True, choices=sorted(BUILTIN_PROBLEMS), help='Built-in problem')
    contrast_parser.add_argument('--eps', type=float, default=1e-4, help='Tolerance')
    contrast_parser.add_argument('--h1-factor', type=float, default=2.0, help='Initial step as a multiple of eps')

    return parser


def display_banner():
    """Display application banner."""
    banner = Text("Integrating Method", style="bold blue")
    subtitle = Text("Guaranteed-tolerance solutions of separable IVPs", style="dim")

    panel = Panel(
        f"{banner}\n{subtitle}",
        border_style="blue",
        padding=(1, 2)
    )
    console.print(panel)


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Map solve flags onto config keys."""
    overrides = {
        'problem': args.problem,
        'integrand': args.integrand,
        'y0': args.y0,
        'b': args.b,
        'eps': args.eps,
        'h1_factor': args.h1_factor,
        'algorithm': args.algorithm,
        'variant': args.variant,
        'mesh_step': args.mesh_step,
        'mesh_count': args.mesh_count,
        'output': args.output,
        'out_path': args.out_path,
        'simplified_js': args.simplified_js,
        'node_cap': args.node_cap,
        'workers': args.workers,
    }
    if args.mesh:
        try:
            overrides['mesh'] = parse_mesh(args.mesh)
        except ValueError as e:
            raise ConfigError(str(e), field='mesh') from e
    return overrides


def display_statistics(report: ExperimentReport, execution_time: float) -> None:
    """Display run statistics."""
    failed = sum(1 for row in report.rows if row.error)
    certified = sum(1 for row in report.rows if row.certified)

    stats_table = Table(title="Run Statistics", show_header=False)
    stats_table.add_column("Metric", style="cyan")
    stats_table.add_column("Value", style="yellow")

    stats_table.add_row("Nodes", str(len(report.rows)))
    stats_table.add_row("Certified", str(certified))
    stats_table.add_row("Failed", str(failed))
    stats_table.add_row("Integrand Evaluations", f"{report.total_evals:,}")
    stats_table.add_row("Execution Time", f"{execution_time:.2f}s")

    console.print(stats_table)


def run_solve(args: argparse.Namespace) -> int:
    """Run the solve command."""
    try:
        config = resolve_config(preset=args.preset, config_path=args.config, overrides=collect_overrides(args))
        runner = ExperimentRunner(config)
    except ConfigError as e:
        console.print(f"[red]Configuration error: {e}[/red]")
        return EXIT_CONFIG

    display_banner()
    start_time = time.time()
    try:
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            console=console
        ) as progress:
            task = progress.add_task("Solving mesh nodes...", total=len(runner.mesh))
            report = runner.run(on_row=lambda row: progress.advance(task))
    except IntegratingError as e:
        console.print(f"[red]Error: {e}[/red]")
        return EXIT_UNCERTIFIED

    execution_time = time.time() - start_time
    try:
        emit(report, config.output, path=config.out_path)
    except OSError as e:
        console.print(f"[red]Cannot write output: {e}[/red]")
        return EXIT_UNCERTIFIED

    display_statistics(report, execution_time)
    if config.out_path:
        console.print(f"[green]Results saved to: {config.out_path}[/green]")

    if not report.all_certified:
        console.print("[yellow]Some nodes are not certified[/yellow]")
        return EXIT_UNCERTIFIED
    return EXIT_OK


def display_conditions(report: ConditionReport) -> None:
    """Display the per-condition screen."""
    table = Table(title=f"Integrating conditions on [{report.y_min:g}, {report.y_max:g}], {report.samples} samples")
    table.add_column("Condition", style="cyan")
    table.add_column("Passed", style="magenta")
    table.add_column("First Violation", style="yellow")
    table.add_column("Check", style="dim")

    for check in report.checks:
        table.add_row(
            check.condition,
            "✓" if check.passed else "✗",
            f"{check.first_violation:g}" if check.first_violation is not None else "",
            check.detail,
        )
    Console().print(table)


def run_check(args: argparse.Namespace) -> int:
    """Run the check command."""
    try:
        report = check_builtin(args.problem, samples=args.samples)
    except (IntegratingError, ValueError) as e:
        console.print(f"[red]Error: {e}[/red]")
        return EXIT_UNCERTIFIED
    display_conditions(report)
    return EXIT_OK if report.all_passed else EXIT_UNCERTIFIED


def run_cost(args: argparse.Namespace) -> int:
    """Run the cost command."""
    try:
        summary = bisection_cost_model(args.j_n, args.j_s, args.b, args.eps)
    except ValueError as e:
        console.print(f"[red]Error: {e}[/red]")
        return EXIT_CONFIG

    table = Table(title="Refinement-search cost (integrand evaluations)", show_header=False)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="yellow", justify="right")
    table.add_row("C_real", f"{summary.c_real:,.0f}")
    table.add_row("C_bisection,1", f"{summary.c_bisection_1:,.0f}")
    table.add_row("C_bisection,2", f"{summary.c_bisection_2:,.0f}")
    table.add_row("C_bisection,1 / C_real", f"{summary.ratio_1:.4f}")
    table.add_row("C_bisection,2 / C_real", f"{summary.ratio_2:.4f}")
    Console().print(table)
    return EXIT_OK


def run_contrast(args: argparse.Namespace) -> int:
    """Run the contrast command."""
    try:
        df = contrast_table(args.problem, eps=args.eps, h1_factor=args.h1_factor)
    except IntegratingError as e:
        console.print(f"[red]Error: {e}[/red]")
        return EXIT_UNCERTIFIED

    table = Table(title=f"Accuracy versus cost: {args.problem}")
    table.add_column("Method", style="cyan")
    table.add_column("y(b)", style="green", justify="right")
    table.add_column("|error|", style="yellow", justify="right")
    table.add_column("Evaluations", justify="right")
    table.add_column("Guaranteed", style="magenta")
    for record in df.to_dict('records'):
        table.add_row(
            record['method'],
            f"{record['y']:.10f}",
            f"{record['abs_error']:.3e}",
            f"{record['evals']:,}",
            "✓" if record['guaranteed'] else "✗",
        )
    Console().print(table)
    return EXIT_OK


def main(argv=None):
    """Main CLI entry point."""
    parser = create_parser()
    args = parser.parse_args(argv)

    if getattr(args, 'verbose', False):
        logging.getLogger().setLevel(logging.DEBUG)

    if not args.command:
        parser.print_help()
        return EXIT_CONFIG

    commands = {
        'solve': run_solve,
        'check': run_check,
        'cost': run_cost,
        'contrast': run_contrast,
    }
    try:
        return commands[args.command](args)
    except KeyboardInterrupt:
        console.print("\n[yellow]Operation cancelled by user[/yellow]")
        return EXIT_UNCERTIFIED


if __name__ == '__main__':
    sys.exit(main())
