"""Solve reports, Monte Carlo summaries and protocol comparison tables."""

from __future__ import annotations

import logging
from pathlib import Path

import pandas as pd
import yaml

from .exceptions import TableError
from .simulation.monte_carlo import McSummary
from .solver.diagnostics import SweepStats
from .solver.iteration import IterationReport
from .solver.table import ValueTable

logger = logging.getLogger("il7-control")

COMPARISON_COLUMNS = [
    "protocol",
    "mean_cost",
    "std_cost",
    "min_cost",
    "cd4_mean",
    "days_under",
    "injections",
    "n_runs",
    "strategy",
]


def _write_yaml(data: dict, path: str | Path) -> Path:
    path = Path(path).expanduser()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(yaml.safe_dump(data, default_flow_style=False, sort_keys=False))
    except OSError as e:
        raise TableError(f"Cannot write {path}: {e}") from e
    return path


def solve_report(
    table: ValueTable,
    report: IterationReport,
    value_at_start: float,
    stats: SweepStats | None = None,
) -> dict:
    data = {
        "config_hash": table.config_hash,
        "value_at_start": float(value_at_start),
        "value_at_delta": float(table.value_at_delta),
        "grid": {"rows": table.grid.n_sum, "columns": table.grid.n_pr},
        "iteration": report.to_dict(),
    }
    if stats is not None:
        data["diagnostics"] = stats.summary()
    return data


def write_solve_report(path: str | Path, data: dict) -> Path:
    return _write_yaml(data, path)


def write_summary(path: str | Path, summary: McSummary, **extra) -> Path:
    return _write_yaml({**summary.to_dict(), **extra}, path)


def comparison_frame(
    summaries: list[McSummary], strategies: dict[str, str] | None = None
) -> pd.DataFrame:
    """One row per protocol with the cost and clinical columns."""
    strategies = strategies or {}
    rows = [
        {
            "protocol": s.protocol,
            "mean_cost": s.mean_cost,
            "std_cost": s.std_cost,
            "min_cost": s.min_cost,
            "cd4_mean": s.mean_cd4,
            "days_under": s.mean_days_under,
            "injections": s.mean_injections,
            "n_runs": s.n_runs,
            "strategy": strategies.get(s.protocol, ""),
        }
        for s in summaries
    ]
    return pd.DataFrame(rows, columns=COMPARISON_COLUMNS)


def write_comparison(frame: pd.DataFrame, path: str | Path) -> Path:
    """Tab-separated comparison table; floats keep their full precision."""
    path = Path(path).expanduser()
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, sep="\t", index=False)
    except OSError as e:
        raise TableError(f"Cannot write comparison table {path}: {e}") from e
    return path


def read_comparison(path: str | Path) -> pd.DataFrame:
    path = Path(path).expanduser()
    if not path.exists():
        raise TableError(f"Comparison table not found: {path}")
    frame = pd.read_csv(
        path, sep="\t", float_precision="round_trip", keep_default_na=False
    )
    missing = set(COMPARISON_COLUMNS) - set(frame.columns)
    if missing:
        raise TableError(f"{path} is missing columns: {', '.join(sorted(missing))}")
    return frame[COMPARISON_COLUMNS]


def render_comparison(frame: pd.DataFrame) -> str:
    """Fixed-width console rendering of a comparison table."""
    header = (
        f"{'Protocol':<12} {'Mean cost':>10} {'Std':>8} {'Min cost':>9} "
        f"{'CD4 mean':>9} {'Days<thr':>9} {'Inj':>6}  Strategy"
    )
    lines = [header, "-" * max(len(header), 80)]
    for row in frame.itertuples(index=False):
        lines.append(
            f"{row.protocol:<12} {row.mean_cost:>10.4f} {row.std_cost:>8.4f} "
            f"{row.min_cost:>9.4f} {row.cd4_mean:>9.1f} {row.days_under:>9.2f} "
            f"{row.injections:>6.2f}  {row.strategy}"
        )
    return "\n".join(lines)
