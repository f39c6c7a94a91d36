"""
Error handling utilities for confmorph.

This module provides centralized error logging, the one-line failure report
printed by the command line, and the mapping of errors to exit codes.
"""

import sys
from collections.abc import Callable
from functools import wraps
from typing import Any, TextIO

from confmorph.misc.exceptions import (
    ConfigurationError,
    LandmarkCountError,
    MeshParseError,
    MorphError,
    ValidationError,
)
from confmorph.misc.logger import logger

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

INPUT_ERRORS = (ConfigurationError, ValidationError, MeshParseError, LandmarkCountError)


class ErrorHandler:
    """Centralized error handler for the command line."""

    def __init__(self, stream: TextIO | None = None) -> None:
        """
        Initialize error handler.

        Args:
            stream: Where failure reports are written, stderr by default
        """
        self.stream = stream
        self.logger = logger

    def handle_error(self, error: BaseException, context: dict[str, Any] | None = None) -> int:
        """
        Log an error, print the failure report and return the exit code.

        Args:
            error: The exception that occurred
            context: Additional context information (command, config path)
        """
        context = context or {}
        self._log_error(error, context)
        print(self._get_user_message(error, context), file=self.stream or sys.stderr)
        return self.exit_code(error)

    @staticmethod
    def exit_code(error: BaseException) -> int:
        if isinstance(error, INPUT_ERRORS):
            return EXIT_INPUT
        if isinstance(error, MorphError):
            return EXIT_NUMERICAL
        return EXIT_UNEXPECTED

    def _log_error(self, error: BaseException, context: dict[str, Any]) -> None:
        error_details: dict[str, Any] = {
            "error_type": type(error).__name__,
            "error_message": str(error),
            "context": context,
        }
        if isinstance(error, MorphError):
            error_details.update({"error_code": error.error_code, "details": error.details})

        if isinstance(error, INPUT_ERRORS):
            self.logger.error("Input error: %s", error_details)
        elif isinstance(error, MorphError):
            self.logger.error("Numerical failure: %s", error_details)
        else:
            self.logger.critical("Unexpected error: %s", error_details, exc_info=error)

    @staticmethod
    def _get_user_message(error: BaseException, context: dict[str, Any]) -> str:
        if isinstance(error, MorphError):
            operation = error.operation or context.get("command", "?")
            return f"failed in {error.details['module']}.{operation}: {error.message}"
        return f"failed in {context.get('command', 'confmorph')}: unexpected {type(error).__name__}: {error}"


def error_handler_decorator(error_handler: ErrorHandler) -> Callable[[Callable[..., int]], Callable[..., int]]:
    """
    Decorator turning exceptions raised by a command into exit codes.

    Args:
        error_handler: ErrorHandler instance
    """

    def decorator(func: Callable[..., int]) -> Callable[..., int]:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> int:
            try:
                return func(*args, **kwargs)
            except Exception as error:  # noqa: BLE001
                return error_handler.handle_error(error, {"command": func.__name__.removeprefix("cmd_")})

        return wrapper

    return decorator
