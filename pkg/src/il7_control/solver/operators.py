"""Pointwise operators N, T and B on a value table.

These evaluate the dynamic-programming operators at one state at a time
and read exactly like their definitions. The grid sweeps in sweep.py
compute the same quantities for whole rows at once.
"""

from __future__ import annotations

import math

from ..config import ModelConfig, PatientParams
from ..exceptions import InvalidArgumentError
from ..model.dynamics import flow
from ..model.pdmp import (
    admissible_actions,
    apply_kernel,
    classify_boundary,
    gradual_cost,
    impulse_cost,
    time_to_boundary,
)
from ..model.state import BoundaryId, State
from .diagnostics import SweepStats
from .table import ValueTable

_CLOCK_EPS = 1e-9


def blended_value(
    table: ValueTable, x: State, stats: SweepStats | None = None
) -> float:
    """W~(x) where theta may fall between two whole days.

    The two bracketing day rows are interpolated in (p, r) at x's counts
    and blended linearly in time.
    """
    if x.is_delta:
        return table.value_at_delta
    day = math.floor(x.theta + _CLOCK_EPS)
    frac = x.theta - day
    if frac <= _CLOCK_EPS:
        return table.value(x.with_clock(round(x.sigma), day), stats)
    sigma0 = round(x.sigma - frac)
    before = table.value(x.with_clock(sigma0, day), stats)
    after = table.value(x.with_clock(sigma0 + 1, day + 1), stats)
    return (1 - frac) * before + frac * after


def op_R(
    table: ValueTable,
    x: State,
    config: ModelConfig,
    stats: SweepStats | None = None,
) -> float:
    """N V(x) = C^g(x) + K V~(gamma reset of x)."""
    if x.is_delta:
        return config.K * table.value_at_delta
    return gradual_cost(x, config) + config.K * blended_value(table, x.gamma_reset(), stats)


def op_T(
    table: ValueTable,
    z: State,
    params: PatientParams,
    config: ModelConfig,
    boundary: BoundaryId | None = None,
    stats: SweepStats | None = None,
) -> tuple[float, float | None]:
    """T V(z): best impulse cost plus post-jump value, and the dose achieving it.

    Ties go to the smallest dose.
    """
    if z.is_delta:
        return table.value_at_delta, None
    boundary = boundary or classify_boundary(z, config)
    if boundary is BoundaryId.INTERIOR:
        raise InvalidArgumentError("T is only defined on the active boundary")
    if stats is not None:
        stats.record_boundary()
    if boundary is BoundaryId.XI2:
        return table.value_at_delta, None
    if boundary is BoundaryId.XI5:
        post = apply_kernel(z, None, params, config, boundary)
        return table.value(post, stats), None

    best_value, best_dose = math.inf, None
    for dose in admissible_actions(z, config, boundary):
        post = apply_kernel(z, dose, params, config, boundary)
        value = impulse_cost(z, dose, config, boundary) + table.value(post, stats)
        if value < best_value:
            best_value, best_dose = value, dose
    return best_value, best_dose


def op_B(
    table: ValueTable,
    y: State,
    params: PatientParams,
    config: ModelConfig,
    stats: SweepStats | None = None,
) -> float:
    """B V(y): discounted running cost up to t*(y) plus the boundary term.

    The running cost is integrated with the composite trapezoidal rule on
    the nodes 0, dt, ..., t*(y).
    """
    beta = config.K + config.alpha
    if y.is_delta:
        return config.K / beta * table.value_at_delta
    t_star, boundary = time_to_boundary(y, params, config)
    steps = round(t_star / config.dt)
    running = 0.0
    for j in range(steps + 1):
        t = j * config.dt
        weight = 0.5 if j in (0, steps) else 1.0
        running += weight * math.exp(-beta * t) * op_R(table, flow(y, t, params, config), config, stats)
    running *= config.dt if steps > 0 else 0.0
    z = flow(y, t_star, params, config)
    terminal, _ = op_T(table, z, params, config, boundary, stats)
    return running + math.exp(-beta * t_star) * terminal
