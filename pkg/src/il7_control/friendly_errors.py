"""Readable error messages and exit codes for the command line.

Maps il7-control exceptions to a short explanation with an actionable
fix, and to the process exit code the CLI returns.
"""

from __future__ import annotations

from dataclasses import dataclass

from .exceptions import (
    ConfigError,
    ConfigHashMismatchError,
    CorruptTableError,
    GridTooLargeError,
    IL7ControlError,
    InvalidArgumentError,
    NoEquilibriumError,
    ProtocolViolationError,
    TableError,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 3
EXIT_NOT_CONVERGED = 4
EXIT_HASH_MISMATCH = 5
EXIT_TABLE = 6
EXIT_GRID_TOO_LARGE = 7


@dataclass
class FriendlyError:
    """An error explained for the terminal, with a fix suggestion."""

    title: str
    message: str
    fix: str
    exit_code: int = EXIT_ERROR


def friendly_error(error: Exception) -> FriendlyError:
    """Convert an exception raised by a subcommand to a FriendlyError."""
    if isinstance(error, ConfigHashMismatchError):
        return FriendlyError(
            title="Value table does not match this configuration",
            message=str(error),
            fix=(
                "The table was solved for different patient or model settings. "
                "Re-run 'il7-control solve' with this config, or pass the config "
                "the table was solved with."
            ),
            exit_code=EXIT_HASH_MISMATCH,
        )
    if isinstance(error, CorruptTableError):
        return FriendlyError(
            title="Value table is damaged",
            message=str(error),
            fix="The file is truncated or was modified. Solve again to recreate it.",
            exit_code=EXIT_TABLE,
        )
    if isinstance(error, TableError):
        return FriendlyError(
            title="Value table file error",
            message=str(error),
            fix="Check the path passed with --value or --out and its permissions.",
            exit_code=EXIT_TABLE,
        )
    if isinstance(error, GridTooLargeError):
        return FriendlyError(
            title="Grid too large",
            message=str(error),
            fix=(
                "Use coarser steps (model.grid.h_p, model.grid.h_r), a shorter "
                "horizon, solver.single_precision: true, or raise "
                "solver.max_table_bytes."
            ),
            exit_code=EXIT_GRID_TOO_LARGE,
        )
    if isinstance(error, (ConfigError, NoEquilibriumError)):
        return FriendlyError(
            title="Configuration error",
            message=str(error),
            fix=(
                "Check the YAML file against configs/patient_a.yaml. Common issues:\n"
                "- grid bounds not a whole number of steps apart\n"
                "- doses not starting at 0 or not increasing\n"
                "- sigma_min shorter than injection_spacing * n_inj"
            ),
            exit_code=EXIT_CONFIG,
        )
    if isinstance(error, InvalidArgumentError):
        return FriendlyError(
            title="Invalid argument",
            message=str(error),
            fix="Run the command with --help to see the accepted values.",
            exit_code=EXIT_CONFIG,
        )
    if isinstance(error, ProtocolViolationError):
        return FriendlyError(
            title="Policy chose an inadmissible dose",
            message=str(error),
            fix="Check that the protocol's doses are listed in model.doses.",
        )
    if isinstance(error, IL7ControlError):
        return FriendlyError(
            title="il7-control error",
            message=str(error),
            fix="Run with --verbose for details.",
        )
    return FriendlyError(
        title="Unexpected error",
        message=f"{type(error).__name__}: {error}",
        fix="Run with --verbose and check ~/.il7-control/logs/il7-control.log.",
    )


def format_friendly_error(err: FriendlyError) -> str:
    """Format a FriendlyError for display in the terminal."""
    lines = [
        f"Error: {err.title}",
        f"   {err.message}",
        "",
        "How to fix:",
    ]
    for line in err.fix.split("\n"):
        lines.append(f"   {line}")
    return "\n".join(lines)
