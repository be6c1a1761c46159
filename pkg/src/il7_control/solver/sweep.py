"""Whole-grid evaluation of B V.

Two sweeps produce the same next table M_{q+1} from M_q:

- fast_sweep walks each diagonal (sigma + d, theta + d) of a block
  backwards. Every lattice point is carried along its exact flow line,
  so the partial sum of a row at the k-day image of a lattice point is
  one day of quadrature plus e^{-(K+alpha)} times the partial sum of the
  next row at the (k+1)-day image. Only M_q is ever interpolated.
- reference_sweep integrates every point directly along its flow line
  up to t*(y), one row at a time. It is the slow oracle for the fast sweep.

Both only read M_q, so M_{q+1} is a function of M_q alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import ModelConfig, PatientParams
from ..model.dynamics import linear_flow
from ..model.pdmp import BOUNDARY_PRIORITY
from ..model.state import BoundaryId
from .diagnostics import SweepStats
from .grid import Block, Grid
from .table import Stencil, bilinear_stencil


# Flow key of the pre-study day, where counts do not move
FROZEN = "frozen"


def fixed_boundary(
    gamma: int, n: int, sigma: int, theta: int, config: ModelConfig
) -> tuple[int, BoundaryId]:
    """Earliest boundary other than Xi4, which depends on (p, r) only."""
    spacing = config.injection_spacing
    candidates = [(config.horizon - theta, BoundaryId.XI2)]
    if n < config.n_inj:
        candidates.append((spacing - sigma, BoundaryId.XI3))
    if gamma > 1 and n == config.n_inj:
        candidates.append((spacing - sigma, BoundaryId.XI5))
    if gamma == 1 and n == 1 and sigma == theta and theta <= 1:
        candidates.append((1 - theta, BoundaryId.XI1))
    return min(candidates, key=lambda c: (c[0], BOUNDARY_PRIORITY[c[1]]))


def can_reach_xi4(gamma: int, n: int, config: ModelConfig) -> bool:
    return gamma == 1 and n == config.n_inj


@dataclass(frozen=True)
class PathStencil:
    """Bilinear stencils of points stacked age by age (age-major columns)."""

    cols: np.ndarray  # (4, ages * N_pr)
    weights: np.ndarray
    clamped_upto: np.ndarray  # clamped points among the first k ages
    width: int

    @classmethod
    def stack(cls, grid: Grid, p: np.ndarray, r: np.ndarray) -> PathStencil:
        per_age = [bilinear_stencil(grid, pk, rk) for pk, rk in zip(p, r)]
        return cls(
            cols=np.concatenate([s.cols for s in per_age], axis=1),
            weights=np.concatenate([s.weights for s in per_age], axis=1),
            clamped_upto=np.concatenate([[0], np.cumsum([s.clamped for s in per_age])]),
            width=grid.n_pr,
        )

    def head(self, ages: int) -> Stencil:
        """Stencil of the first ages ages, N_pr points each."""
        end = ages * self.width
        return Stencil(
            cols=self.cols[:, :end],
            weights=self.weights[:, :end],
            clamped=int(self.clamped_upto[ages]),
        )


@dataclass
class FlowPaths:
    """Whole-day images of every lattice point under one (gamma, n) flow.

    p[k], r[k] are the counts k days after leaving the lattice; nodes[j]
    holds day k's quadrature node at offset node_times[j].
    """

    p: np.ndarray  # (ages, N_pr)
    r: np.ndarray
    under: np.ndarray  # p + r <= threshold
    positions: PathStencil
    nodes: list[PathStencil]
    node_under: list[np.ndarray]


class SweepContext:
    """Everything a sweep needs that does not depend on the table."""

    def __init__(self, grid: Grid, params: PatientParams, config: ModelConfig) -> None:
        self.grid = grid
        self.params = params
        self.config = config
        steps = config.steps_per_day
        self.node_times = np.arange(steps + 1) / steps
        weights = np.full(steps + 1, 1.0 / steps)
        weights[0] = weights[-1] = 0.5 / steps
        self.node_weights = weights
        self.beta = config.K + config.alpha
        self.node_discounts = np.exp(-self.beta * self.node_times)

        self.lattice_p = grid.column_p
        self.lattice_r = grid.column_r
        self.lattice_stencil = bilinear_stencil(grid, self.lattice_p, self.lattice_r)
        self.start_stencil = bilinear_stencil(grid, params.p0, params.r0)

        self.node_maps: dict[object, list[tuple[np.ndarray, np.ndarray]]] = {
            FROZEN: [(np.eye(2), np.zeros(2)) for _ in self.node_times]
        }
        for gamma in range(1, config.n_gamma + 1):
            for n in range(1, config.n_inj + 1):
                day_flow = linear_flow(gamma, n, params, config)
                self.node_maps[(gamma, n)] = [
                    day_flow.affine_map(float(t)) for t in self.node_times
                ]
        self._paths: dict[tuple[int, int], FlowPaths] = {}

    def flow_paths(self, block: Block) -> FlowPaths:
        """Lattice flow lines long enough for every diagonal of block."""
        key = (block.gamma, block.n)
        if key not in self._paths:
            # A row sigma days into its block is at most sigma days from a start row
            self._paths[key] = self._carry_lattice(
                self.node_maps[key], int(block.sigma.max()) + 1
            )
        return self._paths[key]

    def _carry_lattice(
        self, maps: list[tuple[np.ndarray, np.ndarray]], ages: int
    ) -> FlowPaths:
        threshold = self.config.threshold
        ps, rs = [self.lattice_p.copy()], [self.lattice_r.copy()]
        for _ in range(ages - 1):
            p, r = apply_affine(*maps[-1], ps[-1], rs[-1])
            ps.append(p)
            rs.append(r)
        p_arr, r_arr = np.array(ps), np.array(rs)
        nodes, node_under = [], []
        for phi, c in maps:
            pj, rj = apply_affine(phi, c, p_arr, r_arr)
            nodes.append(PathStencil.stack(self.grid, pj, rj))
            node_under.append((pj + rj) <= threshold)
        return FlowPaths(
            p=p_arr,
            r=r_arr,
            under=(p_arr + r_arr) <= threshold,
            positions=PathStencil.stack(self.grid, p_arr, r_arr),
            nodes=nodes,
            node_under=node_under,
        )


def apply_affine(phi: np.ndarray, c: np.ndarray, p, r):
    return (
        phi[0, 0] * p + phi[0, 1] * r + c[0],
        phi[1, 0] * p + phi[1, 1] * r + c[1],
    )


def terminal_values(
    ctx: SweepContext,
    values: np.ndarray,
    value_at_delta: float,
    boundary: BoundaryId,
    n: int,
    theta: int,
    stencil: Stencil,
    stats: SweepStats | None = None,
) -> np.ndarray:
    """T V at boundary points sharing (n, theta), given by their stencil."""
    config, grid = ctx.config, ctx.grid
    count = stencil.cols.shape[1]
    if stats is not None:
        stats.record_boundary(count)
    if boundary is BoundaryId.XI2:
        return np.full(count, value_at_delta)
    if boundary is BoundaryId.XI5:
        row = grid.row_of(1, n, config.injection_spacing, theta)
        _count_clamps(stats, stencil)
        return stencil.apply(row, values)

    weight = config.injection_weight
    if boundary is BoundaryId.XI1:
        options = [
            weight + float(ctx.start_stencil.apply(grid.row_of(k + 1, 1, 0, 1), values)[0])
            for k in range(1, config.n_gamma)
        ]
        return np.full(count, min(options))
    if boundary is BoundaryId.XI3:
        posts = [(k + 1, n + 1, weight if k > 0 else 0.0) for k in range(config.n_gamma)]
    elif boundary is BoundaryId.XI4:
        posts = [(k + 1, 1, weight) for k in range(1, config.n_gamma)]
    else:
        raise ValueError(f"no terminal value on {boundary}")
    candidates = np.stack(
        [cost + stencil.apply(grid.row_of(g, m, 0, theta), values) for g, m, cost in posts]
    )
    _count_clamps(stats, stencil, len(posts))
    # min keeps the first (smallest) dose on ties
    return candidates.min(axis=0)


def _count_clamps(stats: SweepStats | None, stencil: Stencil, times: int = 1) -> None:
    if stats is not None and stencil.clamped:
        stats.record_clamps(stencil.clamped * times)


def block_diagonals(block: Block) -> list[np.ndarray]:
    """Rows of block on each line theta - sigma = const, by increasing sigma.

    The pre-study row (theta = 0) is left out; its day does not move the counts.
    """
    keep = block.theta > 0
    rows = (block.start + np.arange(block.size))[keep]
    sigma = block.sigma[keep]
    offsets = block.theta[keep] - sigma
    diagonals = []
    for offset in np.unique(offsets):
        on_line = offsets == offset
        diagonals.append(rows[on_line][np.argsort(sigma[on_line], kind="stable")])
    return diagonals


def fast_sweep(
    ctx: SweepContext,
    values: np.ndarray,
    value_at_delta: float,
    stats: SweepStats | None = None,
) -> np.ndarray:
    """B V over the whole grid by backward accumulation along exact flow lines."""
    grid = ctx.grid
    new = np.empty_like(values)
    for block in grid.blocks:
        if block.size == 0:
            continue
        paths = ctx.flow_paths(block)
        for diagonal in block_diagonals(block):
            following = None
            for position in range(len(diagonal) - 1, -1, -1):
                row = int(diagonal[position])
                acc = _path_values(
                    ctx, values, value_at_delta, block, paths, row, position + 1, following, stats
                )
                new[row] = acc[0]
                following = acc
    for row in np.flatnonzero(grid.row_theta == 0):
        new[row] = reference_row(
            ctx,
            values,
            value_at_delta,
            int(grid.row_gamma[row]),
            int(grid.row_n[row]),
            int(grid.row_sigma[row]),
            0,
            stats,
        )
    return new


def _path_values(
    ctx: SweepContext,
    values: np.ndarray,
    value_at_delta: float,
    block: Block,
    paths: FlowPaths,
    row: int,
    ages: int,
    following: np.ndarray | None,
    stats: SweepStats | None,
) -> np.ndarray:
    """B V on one row at the 0..ages-1 day images of the lattice, shape (ages, N_pr).

    following is the same array for the next row of the diagonal, one age longer.
    """
    config, grid = ctx.config, ctx.grid
    n = block.n
    sigma, theta = int(grid.row_sigma[row]), int(grid.row_theta[row])
    t_fixed, boundary = fixed_boundary(block.gamma, n, sigma, theta, config)
    if t_fixed == 0:
        terminal = terminal_values(
            ctx, values, value_at_delta, boundary, n, theta, paths.positions.head(ages), stats
        )
        return terminal.reshape(ages, grid.n_pr)
    if following is None:
        raise RuntimeError(
            f"grid is missing the row after sigma={sigma}, theta={theta} in block {block.index}"
        )

    reset_now = grid.row_of(1, n, sigma, theta)
    reset_next = grid.row_of(1, n, sigma + 1, theta + 1)
    acc = ctx.node_discounts[-1] * following[1 : ages + 1]
    for j, t in enumerate(ctx.node_times):
        stencil = paths.nodes[j].head(ages)
        _count_clamps(stats, stencil)
        blend = (1 - t) * stencil.apply(reset_now, values) + t * stencil.apply(reset_next, values)
        running = config.gradual_weight * paths.node_under[j][:ages]
        acc = acc + ctx.node_weights[j] * ctx.node_discounts[j] * (
            running + config.K * blend.reshape(ages, grid.n_pr)
        )

    if can_reach_xi4(block.gamma, n, config) and sigma >= config.sigma_min:
        hit = paths.under[:ages]
        if hit.any():
            stencil = bilinear_stencil(grid, paths.p[:ages][hit], paths.r[:ages][hit])
            acc[hit] = terminal_values(
                ctx, values, value_at_delta, BoundaryId.XI4, n, theta, stencil, stats
            )
    return acc


def reference_sweep(
    ctx: SweepContext,
    values: np.ndarray,
    value_at_delta: float,
    stats: SweepStats | None = None,
) -> np.ndarray:
    """B V over the whole grid by direct quadrature along each flow line."""
    grid = ctx.grid
    new = np.empty_like(values)
    for row in range(grid.n_sum):
        new[row] = reference_row(
            ctx,
            values,
            value_at_delta,
            int(grid.row_gamma[row]),
            int(grid.row_n[row]),
            int(grid.row_sigma[row]),
            int(grid.row_theta[row]),
            stats,
        )
    return new


def reference_row(
    ctx: SweepContext,
    values: np.ndarray,
    value_at_delta: float,
    gamma: int,
    n: int,
    sigma: int,
    theta: int,
    stats: SweepStats | None = None,
) -> np.ndarray:
    """B V on one grid row, integrating each column's flow line to t*."""
    config, grid = ctx.config, ctx.grid
    t_fixed, boundary = fixed_boundary(gamma, n, sigma, theta, config)
    if t_fixed == 0:
        return terminal_values(
            ctx, values, value_at_delta, boundary, n, theta, ctx.lattice_stencil, stats
        )

    maps = ctx.node_maps[FROZEN if theta == 0 else (gamma, n)]
    p, r = ctx.lattice_p.copy(), ctx.lattice_r.copy()
    running = np.zeros(grid.n_pr)
    terminal = np.zeros(grid.n_pr)
    active = np.ones(grid.n_pr, dtype=bool)
    xi4 = can_reach_xi4(gamma, n, config)

    for day in range(t_fixed):
        if xi4 and sigma + day >= config.sigma_min:
            hit = active & ((p + r) <= config.threshold)
            if hit.any():
                stencil = bilinear_stencil(grid, p[hit], r[hit])
                terminal[hit] = np.exp(-ctx.beta * day) * terminal_values(
                    ctx, values, value_at_delta, BoundaryId.XI4, n, theta + day, stencil, stats
                )
                active &= ~hit
        if not active.any():
            break
        reset_now = grid.row_of(1, n, sigma + day, theta + day)
        reset_next = grid.row_of(1, n, sigma + day + 1, theta + day + 1)
        for j, t in enumerate(ctx.node_times):
            pj, rj = apply_affine(*maps[j], p, r)
            stencil = bilinear_stencil(grid, pj, rj)
            _count_clamps(stats, stencil)
            blend = (1 - t) * stencil.apply(reset_now, values) + t * stencil.apply(reset_next, values)
            cost = config.gradual_weight * ((pj + rj) <= config.threshold) if theta + day + t >= 1 else 0.0
            discount = np.exp(-ctx.beta * (day + t))
            running += active * (ctx.node_weights[j] * discount * (cost + config.K * blend))
        p, r = apply_affine(*maps[-1], p, r)

    if active.any():
        stencil = bilinear_stencil(grid, p[active], r[active])
        terminal[active] = np.exp(-ctx.beta * t_fixed) * terminal_values(
            ctx, values, value_at_delta, boundary, n, theta + t_fixed, stencil, stats
        )
    return running + terminal


def boundary_times(ctx: SweepContext) -> np.ndarray:
    """t*(y) for every grid point, as a (rows, columns) integer array."""
    config, grid = ctx.config, ctx.grid
    horizon = config.horizon
    t_star = np.empty(grid.shape, dtype=np.int64)

    # First day at or after k on which the untreated flow from each
    # lattice point is at or under the threshold
    day_flow = ctx.node_maps[(1, config.n_inj)][-1]
    p, r = ctx.lattice_p.copy(), ctx.lattice_r.copy()
    under = np.empty((horizon + 1, grid.n_pr), dtype=bool)
    for day in range(horizon + 1):
        under[day] = (p + r) <= config.threshold
        p, r = apply_affine(*day_flow, p, r)
    first_under = np.full((horizon + 2, grid.n_pr), np.iinfo(np.int64).max, dtype=np.int64)
    for day in range(horizon, -1, -1):
        first_under[day] = np.where(under[day], day, first_under[day + 1])

    for row in range(grid.n_sum):
        gamma, n = int(grid.row_gamma[row]), int(grid.row_n[row])
        sigma, theta = int(grid.row_sigma[row]), int(grid.row_theta[row])
        t_fixed, _ = fixed_boundary(gamma, n, sigma, theta, config)
        t_star[row] = t_fixed
        if can_reach_xi4(gamma, n, config) and t_fixed > 0:
            start = max(0, config.sigma_min - sigma)
            if start < t_fixed:
                t_star[row] = np.minimum(first_under[start], t_fixed)
    return t_star
