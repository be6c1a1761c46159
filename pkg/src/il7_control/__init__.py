"""il7-control: optimal IL-7 injection scheduling as an impulse-control problem."""

__version__ = "0.1.0"

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

__all__ = [
    "__version__",
    "IL7ControlError",
    "InvalidArgumentError",
    "NoEquilibriumError",
    "ConfigError",
    "GridTooLargeError",
    "TableError",
    "CorruptTableError",
    "ConfigHashMismatchError",
    "ProtocolViolationError",
]
