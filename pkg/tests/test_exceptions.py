"""Tests for custom exception hierarchy."""

import pytest

import il7_control
from il7_control.exceptions import (
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


class TestExceptionHierarchy:
    def test_base_exception(self):
        with pytest.raises(IL7ControlError):
            raise IL7ControlError("test")

    @pytest.mark.parametrize(
        "exc",
        [
            InvalidArgumentError,
            NoEquilibriumError,
            ConfigError,
            GridTooLargeError,
            TableError,
            ProtocolViolationError,
        ],
    )
    def test_all_inherit_from_base(self, exc):
        with pytest.raises(IL7ControlError):
            raise exc("boom")

    def test_invalid_argument_is_value_error(self):
        with pytest.raises(ValueError):
            raise InvalidArgumentError("negative duration")

    def test_table_errors_inherit(self):
        with pytest.raises(TableError):
            raise CorruptTableError("truncated")
        with pytest.raises(TableError):
            raise ConfigHashMismatchError("other config")

    def test_error_message(self):
        err = ConfigError("doses[0] must be 0")
        assert str(err) == "doses[0] must be 0"

    def test_reexported_from_package(self):
        assert il7_control.ConfigHashMismatchError is ConfigHashMismatchError
        assert il7_control.__version__ == "0.1.0"
