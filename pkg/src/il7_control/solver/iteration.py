"""Value iteration W_{q+1} = B W_q until the sup-norm residual is below tolerance."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..config import ModelConfig, PatientParams, SolverConfig, config_hash
from ..model.state import initial_state
from .diagnostics import SweepStats
from .grid import Grid, build_grid
from .sweep import SweepContext, boundary_times, fast_sweep, reference_sweep
from .table import ValueTable

logger = logging.getLogger("il7-control")

# Iterations between INFO progress lines
_LOG_EVERY = 10


@dataclass
class IterationReport:
    tolerance: float
    fast: bool
    iterations: int = 0
    residuals: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def final_residual(self) -> float:
        return self.residuals[-1] if self.residuals else float("nan")

    def contraction_ratio(self, burn_in: int = 5) -> float | None:
        """Median ratio of successive residuals after the first burn_in iterations."""
        tail = np.array(self.residuals[burn_in:])
        tail = tail[tail > 0]
        if len(tail) < 2:
            return None
        return float(np.median(tail[1:] / tail[:-1]))

    def to_dict(self) -> dict:
        ratio = self.contraction_ratio()
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "tolerance": self.tolerance,
            "fast_path": self.fast,
            "final_residual": self.final_residual,
            "contraction_ratio": ratio,
            "residuals": [float(r) for r in self.residuals],
        }


def initial_table(
    grid: Grid, params: PatientParams, config: ModelConfig, solver: SolverConfig
) -> ValueTable:
    """W_0: zero, or -K_A / -(K_A + K_B) split on t* when those constants are set."""
    dtype = np.float32 if solver.single_precision else np.float64
    table = ValueTable.constant(grid, 0.0, dtype=dtype, config_hash=config_hash(params, config))
    if solver.w0_ka is None:
        return table
    t_star = boundary_times(SweepContext(grid, params, config))
    table.values[:] = np.where(
        t_star > solver.w0_eps1, -solver.w0_ka, -(solver.w0_ka + solver.w0_kb)
    )
    return table


def apply_b(
    table: ValueTable,
    params: PatientParams,
    config: ModelConfig,
    fast: bool = True,
    ctx: SweepContext | None = None,
    stats: SweepStats | None = None,
) -> ValueTable:
    """One application of B to a whole table."""
    ctx = ctx or SweepContext(table.grid, params, config)
    sweep = fast_sweep if fast else reference_sweep
    values = sweep(ctx, table.values, table.value_at_delta, stats)
    delta = config.K / (config.K + config.alpha) * table.value_at_delta
    return ValueTable(
        grid=table.grid,
        values=values,
        value_at_delta=delta,
        config_hash=table.config_hash,
        iterations=table.iterations + 1,
    )


def iterate(
    config: ModelConfig,
    params: PatientParams,
    w0: ValueTable | None = None,
    solver: SolverConfig | None = None,
    stats: SweepStats | None = None,
) -> tuple[ValueTable, IterationReport]:
    """Iterate B from w0 until converged or solver.max_iter sweeps.

    A table is returned either way; check report.converged.
    """
    solver = solver or SolverConfig()
    stats = stats or SweepStats()
    if w0 is None:
        grid = build_grid(config, solver.max_table_bytes, solver.single_precision)
        w0 = initial_table(grid, params, config, solver)
    ctx = SweepContext(w0.grid, params, config)
    report = IterationReport(tolerance=solver.tol, fast=solver.fast)

    current = w0
    for q in range(1, solver.max_iter + 1):
        stats.begin_sweep()
        nxt = apply_b(current, params, config, solver.fast, ctx, stats)
        stats.end_sweep()
        residual = max(
            float(np.max(np.abs(nxt.values - current.values))),
            abs(float(nxt.value_at_delta) - float(current.value_at_delta)),
        )
        report.residuals.append(residual)
        report.iterations = q
        current = nxt
        logger.debug(
            "Iteration %d: residual %.3e, %d clamped lookups",
            q, residual, stats.sweep_clamps,
        )
        if q % _LOG_EVERY == 0:
            logger.info(
                "Iteration %d: residual %.3e, %d clamped lookups",
                q, residual, stats.sweep_clamps,
            )
        if residual <= solver.tol:
            report.converged = True
            break

    current.config_hash = config_hash(params, config)
    current.iterations = report.iterations
    current.residual = report.final_residual
    current.converged = report.converged
    if report.converged:
        logger.info(
            "Converged after %d iterations (residual %.3e)",
            report.iterations, report.final_residual,
        )
    else:
        logger.warning(
            "No convergence after %d iterations (residual %.3e > %.1e)",
            report.iterations, report.final_residual, solver.tol,
        )
    if stats.total_clamps:
        logger.info(
            "%d lookups were clamped to the (p, r) lattice; consider wider grid bounds",
            stats.total_clamps,
        )
    return current, report


def value_at_start(table: ValueTable, params: PatientParams) -> float:
    """W(x0) for the patient's initial state."""
    return table.value(initial_state(params))
