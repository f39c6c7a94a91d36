"""Unit tests for the error hierarchy, exit codes and log level handling."""

import io
import logging

import pytest

from confmorph.misc.error_handler import (
    EXIT_INPUT,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_UNEXPECTED,
    ErrorHandler,
    error_handler_decorator,
)
from confmorph.misc.exceptions import (
    BoundaryLoopError,
    ConfigurationError,
    DivergenceError,
    LandmarkCountError,
    MeshParseError,
    MorphError,
    PointLocationError,
    ValidationError,
)
from confmorph.misc.logger import logger, resolve_log_level, setup_logger


class TestExceptions:
    """Error details name the failing module and operation."""

    def test_module_and_operation_in_details(self):
        """Test that every error carries its pipeline module."""
        error = BoundaryLoopError(0, "one boundary loop", operation="riemann_disk_map")
        assert error.details["module"] == "mesh-core"
        assert error.operation == "riemann_disk_map"
        assert error.error_code == "BOUNDARY_LOOP_ERROR"
        assert error.message == "Expected one boundary loop, found 0 boundary loop(s)"

    def test_base_error_defaults(self):
        """Test the base error without optional arguments."""
        error = MorphError("boom")
        assert str(error) == "boom"
        assert error.details == {"module": "confmorph", "operation": None}

    def test_parse_error_mentions_line(self):
        """Test that parse errors point at the offending line."""
        error = MeshParseError("a.obj", "bad vertex", line=7)
        assert "a.obj:7" in error.message
        assert error.details["line"] == 7


class TestErrorHandler:
    """Failure reports and exit codes."""

    @pytest.mark.parametrize(
        ("error", "code"),
        [
            (ConfigurationError("missing"), EXIT_INPUT),
            (ValidationError("bad value"), EXIT_INPUT),
            (MeshParseError("a.obj", "empty"), EXIT_INPUT),
            (LandmarkCountError(2, 3, "mobius_fit"), EXIT_INPUT),
            (DivergenceError([1.0, 2.0, 4.0, 8.0]), EXIT_NUMERICAL),
            (PointLocationError((2.0, 0.0), 1.0), EXIT_NUMERICAL),
            (RuntimeError("surprise"), EXIT_UNEXPECTED),
        ],
    )
    def test_exit_codes(self, error: BaseException, code: int):
        """Test the error to exit code mapping."""
        assert ErrorHandler.exit_code(error) == code

    def test_report_format(self, quiet_logs: pytest.LogCaptureFixture):
        """Test the one-line failure report for a library error."""
        stream = io.StringIO()
        handler = ErrorHandler(stream)
        code = handler.handle_error(BoundaryLoopError(0, "one boundary loop", operation="riemann_disk_map"))
        assert code == EXIT_NUMERICAL
        assert stream.getvalue().strip() == (
            "failed in mesh-core.riemann_disk_map: Expected one boundary loop, found 0 boundary loop(s)"
        )

    def test_report_falls_back_to_command(self, quiet_logs: pytest.LogCaptureFixture):
        """Test that an error without operation reports the command."""
        stream = io.StringIO()
        ErrorHandler(stream).handle_error(MorphError("boom"), {"command": "morph"})
        assert stream.getvalue().strip() == "failed in confmorph.morph: boom"

    def test_unexpected_error_report(self, caplog: pytest.LogCaptureFixture):
        """Test that unexpected errors are logged as critical."""
        stream = io.StringIO()
        with caplog.at_level(logging.CRITICAL, logger="confmorph"):
            code = ErrorHandler(stream).handle_error(KeyError("x"), {"command": "match"})
        assert code == EXIT_UNEXPECTED
        assert stream.getvalue().startswith("failed in match: unexpected KeyError")
        assert any(record.levelno == logging.CRITICAL for record in caplog.records)

    def test_decorator_passes_through_success(self):
        """Test that a successful command keeps its exit code."""
        handler = ErrorHandler(io.StringIO())

        @error_handler_decorator(handler)
        def cmd_ok() -> int:
            return EXIT_OK

        assert cmd_ok() == EXIT_OK

    def test_decorator_names_command(self, quiet_logs: pytest.LogCaptureFixture):
        """Test that the decorator reports the command without its prefix."""
        stream = io.StringIO()

        @error_handler_decorator(ErrorHandler(stream))
        def cmd_frame() -> int:
            raise ValueError("broken")

        assert cmd_frame() == EXIT_UNEXPECTED
        assert stream.getvalue().startswith("failed in frame: unexpected ValueError")


class TestLogger:
    """MORPH_LOG handling."""

    @pytest.mark.parametrize(
        ("value", "level"),
        [(None, logging.INFO), ("", logging.INFO), ("error", logging.ERROR), ("DEBUG", logging.DEBUG), (" info ", logging.INFO)],
    )
    def test_resolve_log_level(self, value: str | None, level: int):
        """Test accepted level names."""
        assert resolve_log_level(value) == level

    def test_unknown_level(self):
        """Test that an unknown level is a configuration error."""
        with pytest.raises(ConfigurationError) as info:
            resolve_log_level("verbose")
        assert info.value.details["config_key"] == "MORPH_LOG"

    def test_setup_from_environment(self, monkeypatch: pytest.MonkeyPatch):
        """Test that setup reads MORPH_LOG."""
        monkeypatch.setenv("MORPH_LOG", "error")
        setup_logger()
        assert logger.level == logging.ERROR
