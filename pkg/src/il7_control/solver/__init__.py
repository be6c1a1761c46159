"""Value iteration on the state-space grid and value-table storage."""

from .diagnostics import SweepStats
from .grid import Grid, build_grid, chi, chi_inverse
from .iteration import IterationReport, apply_b, iterate, value_at_start
from .operators import op_B, op_R, op_T
from .store import load_table, save_table
from .table import ValueTable, interpolate_value

__all__ = [
    "Grid",
    "IterationReport",
    "SweepStats",
    "ValueTable",
    "apply_b",
    "build_grid",
    "chi",
    "chi_inverse",
    "interpolate_value",
    "iterate",
    "load_table",
    "op_B",
    "op_R",
    "op_T",
    "save_table",
    "value_at_start",
]
