"""Custom exception hierarchy for il7-control.

All il7-control exceptions inherit from IL7ControlError, allowing callers
to catch broad or specific errors:

    try:
        table = load_table(path, params, config)
    except ConfigHashMismatchError as e:
        print(f"Table was solved for another configuration: {e}")
    except IL7ControlError as e:
        print(f"il7-control error: {e}")
"""

from __future__ import annotations


class IL7ControlError(Exception):
    """Base exception for all il7-control errors."""


class InvalidArgumentError(IL7ControlError, ValueError):
    """Raised when an operation receives an argument outside its domain."""


class NoEquilibriumError(IL7ControlError):
    """Raised when the CD4 model has no stable positive equilibrium."""


class ConfigError(IL7ControlError):
    """Raised when configuration is invalid or missing."""


class GridTooLargeError(IL7ControlError):
    """Raised when the value table would exceed the configured memory cap."""


class TableError(IL7ControlError):
    """Raised when a value-table file cannot be read or written."""


class CorruptTableError(TableError):
    """Raised when a value-table file is truncated or fails its checksum."""


class ConfigHashMismatchError(TableError):
    """Raised when a value table was solved for a different configuration."""


class ProtocolViolationError(IL7ControlError):
    """Raised when a policy returns a dose outside the admissible set."""
