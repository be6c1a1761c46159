"""CLI entry point for il7-control."""

from __future__ import annotations

import functools
import logging
import math
import sys
from pathlib import Path

import click

from . import __version__
from .config import RunConfig, load_config
from .exceptions import IL7ControlError
from .friendly_errors import (
    EXIT_NOT_CONVERGED,
    format_friendly_error,
    friendly_error,
)

logger = logging.getLogger("il7-control")


def _configure_logging(verbose: bool = False) -> None:
    """Set up logging with console and optional file output."""
    log_level = logging.DEBUG if verbose else logging.INFO
    log_format = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
    date_format = "%Y-%m-%d %H:%M:%S"

    # Console handler (stderr so tables on stdout stay clean)
    console = logging.StreamHandler(sys.stderr)
    console.setLevel(log_level)
    console.setFormatter(logging.Formatter(log_format, datefmt=date_format))

    # File handler (optional, best-effort)
    handlers: list[logging.Handler] = [console]
    log_dir = Path("~/.il7-control/logs").expanduser()
    try:
        log_dir.mkdir(parents=True, exist_ok=True)
        from logging.handlers import RotatingFileHandler

        file_handler = RotatingFileHandler(
            log_dir / "il7-control.log",
            maxBytes=5 * 1024 * 1024,  # 5 MB
            backupCount=3,
        )
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(logging.Formatter(log_format, datefmt=date_format))
        handlers.append(file_handler)
    except Exception:
        pass  # File logging is best-effort

    logging.basicConfig(level=log_level, handlers=handlers, force=True)


def _handle_errors(func):
    """Turn il7-control errors into a readable message and an exit code."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except IL7ControlError as e:
            logger.debug("Command failed", exc_info=True)
            err = friendly_error(e)
            click.echo(format_friendly_error(err), err=True)
            sys.exit(err.exit_code)

    return wrapper


def _load(config_path: str) -> RunConfig:
    config = load_config(config_path)
    logger.info(
        "Loaded %s (patient %s, config %s)",
        config_path, config.patient.name or "unnamed", config.config_hash[:12],
    )
    return config


# ── CLI Commands ─────────────────────────────────────────


@click.group()
@click.version_option(version=__version__, prog_name="il7-control")
@click.option("--verbose", "-v", is_flag=True, default=False, help="Debug logging")
def main(verbose: bool) -> None:
    """Optimal IL-7 injection schedules: solve, simulate and compare."""
    _configure_logging(verbose)


@main.command()
@click.option("--config", "config_path", required=True, help="Run config YAML")
@click.option("--out", "out_path", required=True, help="Value table file to write")
@click.option("--fast/--reference", default=None, help="Sweep path (default: config)")
@click.option("--tol", type=float, default=None, help="Sup-norm tolerance")
@click.option("--max-iter", type=int, default=None, help="Iteration cap")
@_handle_errors
def solve(
    config_path: str,
    out_path: str,
    fast: bool | None,
    tol: float | None,
    max_iter: int | None,
) -> None:
    """Iterate the value function to convergence and save the table."""
    from .report import solve_report, write_solve_report
    from .solver import SweepStats, iterate, save_table, value_at_start

    config = _load(config_path)
    overrides = {
        key: value
        for key, value in (("fast", fast), ("tol", tol), ("max_iter", max_iter))
        if value is not None
    }
    solver = config.solver.model_copy(update=overrides)
    stats = SweepStats()
    table, report = iterate(config.model, config.patient, solver=solver, stats=stats)
    save_table(table, out_path)

    w0 = value_at_start(table, config.patient)
    report_path = write_solve_report(
        f"{out_path}.report.yaml", solve_report(table, report, w0, stats)
    )
    click.echo(f"W(x0) = {w0:.6f}")
    click.echo(
        f"Iterations: {report.iterations}, residual {report.final_residual:.3e}, "
        f"converged: {'yes' if report.converged else 'no'}"
    )
    click.echo(f"Table: {out_path}")
    click.echo(f"Report: {report_path}")
    if not report.converged:
        sys.exit(EXIT_NOT_CONVERGED)


@main.command()
@click.option("--config", "config_path", required=True, help="Run config YAML")
@click.option("--value", "value_path", required=True, help="Solved value table")
@click.option("--n", "n_runs", type=int, default=None, help="Monte Carlo runs")
@click.option("--seed", type=int, default=None, help="RNG seed")
@click.option("--out", "out_path", required=True, help="Summary YAML to write")
@click.option("--trajectories", "traj_path", default=None, help="Also export paths here")
@click.option("--export-count", type=int, default=10, help="Replicates to export")
@_handle_errors
def simulate(
    config_path: str,
    value_path: str,
    n_runs: int | None,
    seed: int | None,
    out_path: str,
    traj_path: str | None,
    export_count: int,
) -> None:
    """Monte Carlo evaluation of the optimal policy of a value table."""
    from .report import write_summary
    from .simulation import OptimalPolicy, monte_carlo
    from .simulation.monte_carlo import simulate_replicate
    from .simulation.trajectory import export_trajectories
    from .solver import load_table, value_at_start

    config = _load(config_path)
    n_runs = config.mc.n_runs if n_runs is None else n_runs
    seed = config.mc.seed if seed is None else seed
    table = load_table(value_path, config.patient, config.model)
    policy = OptimalPolicy(table, config.patient, config.model)
    summary = monte_carlo(policy, config.patient, config.model, n_runs, seed)

    w0 = value_at_start(table, config.patient)
    gap = summary.mean_cost - w0
    z_score = gap / summary.standard_error if summary.standard_error > 0 else (
        0.0 if math.isclose(gap, 0.0, abs_tol=1e-9) else math.inf
    )
    if abs(z_score) > 3:
        logger.warning(
            "Simulated mean cost %.4f is %.1f standard errors from W(x0) = %.4f",
            summary.mean_cost, z_score, w0,
        )
    write_summary(
        out_path, summary,
        value_at_start=float(w0), z_score=float(z_score), config_hash=config.config_hash,
    )
    click.echo(
        f"Mean cost {summary.mean_cost:.4f} (sd {summary.std_cost:.4f}, "
        f"se {summary.standard_error:.4f}); W(x0) = {w0:.4f}"
    )
    click.echo(f"Summary: {out_path}")

    if traj_path:
        count = min(export_count, n_runs)
        records = [
            simulate_replicate(policy, config.patient, config.model, seed, i)
            for i in range(count)
        ]
        export_trajectories(records, traj_path)
        click.echo(f"Trajectories ({count}): {traj_path}")


@main.command()
@click.option("--config", "config_path", required=True, help="Run config YAML")
@click.option("--value", "value_path", required=True, help="Solved value table")
@click.option("--protocol", "protocols", multiple=True, help="Naive protocol (repeatable)")
@click.option("--n", "n_runs", type=int, default=None, help="Monte Carlo runs")
@click.option("--seed", type=int, default=None, help="RNG seed")
@click.option("--out", "out_path", required=True, help="Comparison TSV to write")
@_handle_errors
def compare(
    config_path: str,
    value_path: str,
    protocols: tuple[str, ...],
    n_runs: int | None,
    seed: int | None,
    out_path: str,
) -> None:
    """Compare the optimal policy with naive protocols."""
    from .report import comparison_frame, render_comparison, write_comparison
    from .simulation import (
        NAMED_PROTOCOLS,
        OptimalPolicy,
        make_fixed_protocol,
        monte_carlo,
        strategy_shape,
    )
    from .simulation.trajectory import describe_shape
    from .solver import load_table

    config = _load(config_path)
    n_runs = config.mc.n_runs if n_runs is None else n_runs
    seed = config.mc.seed if seed is None else seed
    # Validate protocol names before the expensive part
    fixed = [make_fixed_protocol(name, config.model) for name in (protocols or NAMED_PROTOCOLS)]
    table = load_table(value_path, config.patient, config.model)
    policies = [OptimalPolicy(table, config.patient, config.model), *fixed]

    summaries = []
    strategies = {}
    for policy in policies:
        summaries.append(monte_carlo(policy, config.patient, config.model, n_runs, seed))
        strategies[policy.name] = describe_shape(
            strategy_shape(policy, config.patient, config.model)
        )
    frame = comparison_frame(summaries, strategies)
    write_comparison(frame, out_path)
    click.echo(render_comparison(frame))
    click.echo(f"\nTable: {out_path}")

    best = frame.loc[frame["mean_cost"].idxmin(), "protocol"]
    if best != "Optimal":
        logger.warning("Protocol %s has a lower mean cost than the optimal policy", best)


@main.command("export-trajectory")
@click.option("--config", "config_path", required=True, help="Run config YAML")
@click.option("--value", "value_path", default=None, help="Solved value table (optimal policy)")
@click.option("--protocol", default=None, help="Naive protocol name")
@click.option("--seed", type=int, default=None, help="RNG seed")
@click.option("--out", "out_path", required=True, help="Trajectory TSV to write")
@_handle_errors
def export_trajectory(
    config_path: str,
    value_path: str | None,
    protocol: str | None,
    seed: int | None,
    out_path: str,
) -> None:
    """Export one simulated trajectory for plotting."""
    from .exceptions import InvalidArgumentError
    from .simulation import OptimalPolicy, make_fixed_protocol
    from .simulation.monte_carlo import simulate_replicate
    from .simulation.trajectory import export_trajectories
    from .solver import load_table

    if (value_path is None) == (protocol is None):
        raise InvalidArgumentError("pass exactly one of --value or --protocol")
    config = _load(config_path)
    seed = config.mc.seed if seed is None else seed
    if value_path is not None:
        table = load_table(value_path, config.patient, config.model)
        policy = OptimalPolicy(table, config.patient, config.model)
    else:
        policy = make_fixed_protocol(protocol, config.model)
    record = simulate_replicate(policy, config.patient, config.model, seed, 0)
    export_trajectories([record], out_path)
    click.echo(
        f"{policy.name}: cost {record.discounted_cost:.4f}, "
        f"{record.injections} injections, {record.days_under_threshold:.1f} days under threshold"
    )
    click.echo(f"Trajectory: {out_path}")


if __name__ == "__main__":
    main()
