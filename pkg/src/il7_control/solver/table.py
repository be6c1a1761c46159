"""Value table M_q and bilinear lookups in (p, r)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..model.state import State
from .diagnostics import SweepStats
from .grid import Grid


@dataclass
class ValueTable:
    """W_q on the grid: one row per (gamma, n, sigma, theta), one column per (p, r)."""

    grid: Grid
    values: np.ndarray
    value_at_delta: float = 0.0
    config_hash: str = ""
    iterations: int = 0
    residual: float = float("nan")
    converged: bool = False
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    @classmethod
    def constant(
        cls, grid: Grid, value: float = 0.0, dtype: type = np.float64, **kwargs
    ) -> ValueTable:
        values = np.full(grid.shape, value, dtype=dtype)
        return cls(grid=grid, values=values, value_at_delta=value, **kwargs)

    def value(self, x: State, stats: SweepStats | None = None) -> float:
        """W(x) for any state, interpolating off-lattice (p, r)."""
        if x.is_delta:
            return self.value_at_delta
        return interpolate_value(self, x, stats)


@dataclass(frozen=True)
class Stencil:
    """Bilinear weights of a batch of (p, r) points.

    cols[k] and weights[k] (k = 0..3) give the four corner columns and
    their weights; points outside the lattice are clamped onto it.
    """

    cols: np.ndarray  # (4, N) int
    weights: np.ndarray  # (4, N) float
    clamped: int

    def apply(self, rows: np.ndarray | int, values: np.ndarray) -> np.ndarray:
        """Interpolate values[row] at the stencil points.

        rows is a scalar row or an array of rows of shape (k,); the result
        has shape (N,) or (k, N).
        """
        rows = np.asarray(rows)
        if rows.ndim == 0:
            corner = values[rows, self.cols]
            return np.einsum("kn,kn->n", corner.astype(np.float64), self.weights)
        corner = values[rows[:, None, None], self.cols[None, :, :]]
        return np.einsum("mkn,kn->mn", corner.astype(np.float64), self.weights)


def bilinear_stencil(grid: Grid, p: np.ndarray, r: np.ndarray) -> Stencil:
    """Corner columns and weights for points (p, r), clamping to the lattice."""
    p = np.atleast_1d(np.asarray(p, dtype=np.float64))
    r = np.atleast_1d(np.asarray(r, dtype=np.float64))
    fp = (p - grid.p_min) / grid.h_p
    fr = (r - grid.r_min) / grid.h_r
    clamped = (fp < 0) | (fp > grid.n_p - 1) | (fr < 0) | (fr > grid.n_r - 1)
    fp = np.clip(fp, 0.0, grid.n_p - 1)
    fr = np.clip(fr, 0.0, grid.n_r - 1)
    ip = np.minimum(np.floor(fp).astype(np.int64), grid.n_p - 2)
    ir = np.minimum(np.floor(fr).astype(np.int64), grid.n_r - 2)
    tp = fp - ip
    tr = fr - ir
    base = ip + grid.n_p * ir
    cols = np.stack([base, base + 1, base + grid.n_p, base + grid.n_p + 1])
    weights = np.stack(
        [(1 - tp) * (1 - tr), tp * (1 - tr), (1 - tp) * tr, tp * tr]
    )
    return Stencil(cols=cols, weights=weights, clamped=int(clamped.sum()))


def interpolate_value(
    table: ValueTable, x: State, stats: SweepStats | None = None
) -> float:
    """Bilinear value of table at x inside x's (gamma, n, sigma, theta) row."""
    row = table.grid.row_of(x.gamma, x.n, x.sigma, x.theta)
    stencil = bilinear_stencil(table.grid, x.p, x.r)
    if stats is not None:
        stats.record_clamps(stencil.clamped)
    return float(stencil.apply(row, table.values)[0])
