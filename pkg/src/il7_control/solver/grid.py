"""State-space grid: reachable (gamma, n, sigma, theta) rows by (p, r) columns.

Rows are grouped in blocks, one per (gamma, n) with block index
i = gamma + (m_d + 1)(n - 1). Inside a block rows are ordered by theta,
then sigma. Columns enumerate the regular (p, r) lattice with p varying
fastest. Public indices are 1-based; arrays are indexed 0-based.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..config import ModelConfig
from ..exceptions import GridTooLargeError, InvalidArgumentError
from ..model.state import State

logger = logging.getLogger("il7-control")

_LATTICE_EPS = 1e-9
# Current and next table are held at the same time during a sweep
_TABLES_IN_MEMORY = 2


@dataclass(frozen=True)
class Block:
    index: int  # 1-based block index
    gamma: int
    n: int
    start: int  # 0-based offset of the block's first row
    sigma: np.ndarray
    theta: np.ndarray

    @property
    def size(self) -> int:
        return len(self.sigma)


def block_index(gamma: int, n: int, config: ModelConfig) -> int:
    return gamma + config.n_gamma * (n - 1)


def _block_pairs(gamma: int, n: int, config: ModelConfig) -> list[tuple[int, int]]:
    """Reachable (sigma, theta) pairs of block (gamma, n), theta-major."""
    spacing, horizon = config.injection_spacing, config.horizon
    first = 1 + spacing * (n - 1)  # earliest day injection n can be given
    pairs: list[tuple[int, int]] = []
    if gamma == 1 and n == 1:
        pairs.append((0, 0))
    for theta in range(first, horizon + 1):
        if gamma == 1 and n == config.n_inj:
            top = theta - first
        else:
            top = min(spacing, theta - first)
        pairs.extend((sigma, theta) for sigma in range(top + 1))
        if gamma == 1 and n == 1 and theta == 1:
            pairs.append((1, 1))
    return pairs


class Grid:
    """Index structures of the grid; build with build_grid()."""

    def __init__(self, config: ModelConfig) -> None:
        self.config = config
        grid = config.grid
        self.n_p, self.n_r = grid.n_p, grid.n_r
        self.h_p, self.h_r = grid.h_p, grid.h_r
        self.p_min, self.r_min = grid.p_min, grid.r_min
        self.p_values = grid.p_min + grid.h_p * np.arange(self.n_p)
        self.r_values = grid.r_min + grid.h_r * np.arange(self.n_r)
        # Column s (0-based) holds p_values[s % n_p], r_values[s // n_p]
        self.column_p = np.tile(self.p_values, self.n_r)
        self.column_r = np.repeat(self.r_values, self.n_p)

        blocks: list[Block] = []
        start = 0
        for n in range(1, config.n_inj + 1):
            for gamma in range(1, config.n_gamma + 1):
                pairs = np.array(_block_pairs(gamma, n, config), dtype=np.int64)
                blocks.append(
                    Block(
                        index=block_index(gamma, n, config),
                        gamma=gamma,
                        n=n,
                        start=start,
                        sigma=pairs[:, 0],
                        theta=pairs[:, 1],
                    )
                )
                start += len(pairs)
        self.blocks = blocks
        self.n_sum = start

        self.row_gamma = np.concatenate([np.full(b.size, b.gamma) for b in blocks])
        self.row_n = np.concatenate([np.full(b.size, b.n) for b in blocks])
        self.row_sigma = np.concatenate([b.sigma for b in blocks])
        self.row_theta = np.concatenate([b.theta for b in blocks])

        horizon = config.horizon
        self._lookup = np.full(
            (len(blocks), horizon + 1, horizon + 1), -1, dtype=np.int64
        )
        for b in blocks:
            self._lookup[b.index - 1, b.sigma, b.theta] = b.start + np.arange(b.size)

    @property
    def n_pr(self) -> int:
        return self.n_p * self.n_r

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_sum, self.n_pr

    def block(self, gamma: int, n: int) -> Block:
        return self.blocks[block_index(gamma, n, self.config) - 1]

    def has_row(self, gamma: int, n: int, sigma: int, theta: int) -> bool:
        horizon = self.config.horizon
        if not (1 <= gamma <= self.config.n_gamma and 1 <= n <= self.config.n_inj):
            return False
        if not (0 <= sigma <= horizon and 0 <= theta <= horizon):
            return False
        return self._lookup[block_index(gamma, n, self.config) - 1, sigma, theta] >= 0

    def row_of(self, gamma: int, n: int, sigma: float, theta: float) -> int:
        """0-based row of (gamma, n, sigma, theta); sigma and theta must be whole days."""
        s, t = round(sigma), round(theta)
        if abs(s - sigma) > _LATTICE_EPS or abs(t - theta) > _LATTICE_EPS:
            raise InvalidArgumentError(
                f"sigma={sigma}, theta={theta} are not whole days"
            )
        if not self.has_row(gamma, n, s, t):
            raise InvalidArgumentError(
                f"(gamma={gamma}, n={n}, sigma={s}, theta={t}) is not on the grid"
            )
        return int(self._lookup[block_index(gamma, n, self.config) - 1, s, t])

    def rows_of(self, gamma: int, n: int, sigma: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Vectorised row_of for integer clock arrays; -1 where off the grid."""
        return self._lookup[block_index(gamma, n, self.config) - 1, sigma, theta]

    def column_of(self, p: float, r: float) -> int:
        """0-based column of a lattice point."""
        ip = (p - self.p_min) / self.h_p
        ir = (r - self.r_min) / self.h_r
        ip_i, ir_i = round(ip), round(ir)
        if (
            abs(ip - ip_i) > _LATTICE_EPS
            or abs(ir - ir_i) > _LATTICE_EPS
            or not 0 <= ip_i < self.n_p
            or not 0 <= ir_i < self.n_r
        ):
            raise InvalidArgumentError(
                f"(p={p}, r={r}) is not a lattice point; use interpolate_value"
            )
        return ip_i + self.n_p * ir_i

    def table_bytes(self, itemsize: int = 8) -> int:
        return self.n_sum * self.n_pr * itemsize

    def sizing_report(self, itemsize: int = 8) -> str:
        total = self.table_bytes(itemsize) * _TABLES_IN_MEMORY
        return (
            f"{self.n_sum} rows x {self.n_pr} columns x {itemsize} bytes "
            f"x {_TABLES_IN_MEMORY} tables = {total / 1024**2:.1f} MiB"
        )


def build_grid(
    config: ModelConfig,
    max_table_bytes: int | None = None,
    single_precision: bool = False,
) -> Grid:
    """Enumerate the reachable grid and check it fits the memory cap."""
    grid = Grid(config)
    itemsize = 4 if single_precision else 8
    logger.info("Grid: %d blocks, %s", len(grid.blocks), grid.sizing_report(itemsize))
    if max_table_bytes is not None:
        needed = grid.table_bytes(itemsize) * _TABLES_IN_MEMORY
        if needed > max_table_bytes:
            raise GridTooLargeError(
                f"Value tables need {grid.sizing_report(itemsize)}, "
                f"over the cap of {max_table_bytes / 1024**2:.1f} MiB"
            )
    return grid


def chi(grid: Grid, x: State) -> tuple[int, int]:
    """(v, s): 1-based row and column of a grid point."""
    v = grid.row_of(x.gamma, x.n, x.sigma, x.theta) + 1
    s = grid.column_of(x.p, x.r) + 1
    return v, s


def chi_inverse(grid: Grid, v: int, s: int) -> State:
    """The grid point stored at 1-based row v and column s."""
    if not (1 <= v <= grid.n_sum and 1 <= s <= grid.n_pr):
        raise InvalidArgumentError(f"(v={v}, s={s}) outside {grid.shape}")
    row, col = v - 1, s - 1
    return State(
        gamma=int(grid.row_gamma[row]),
        n=int(grid.row_n[row]),
        sigma=int(grid.row_sigma[row]),
        theta=int(grid.row_theta[row]),
        p=float(grid.column_p[col]),
        r=float(grid.column_r[col]),
    )
