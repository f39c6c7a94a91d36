"""
Command handlers, one module per subcommand.

Handlers raise; the entry point wraps each one with the error handler that
turns exceptions into the failure report and exit code.
"""

import argparse
from collections.abc import Callable

from confmorph.handlers.frame import cmd_frame
from confmorph.handlers.match import cmd_match
from confmorph.handlers.metrics import cmd_metrics
from confmorph.handlers.morph import cmd_morph
from confmorph.handlers.parameterize import cmd_parameterize

COMMANDS: dict[str, Callable[[argparse.Namespace], int]] = {
    "parameterize": cmd_parameterize,
    "match": cmd_match,
    "frame": cmd_frame,
    "morph": cmd_morph,
    "metrics": cmd_metrics,
}

__all__ = ["COMMANDS", "cmd_frame", "cmd_match", "cmd_metrics", "cmd_morph", "cmd_parameterize"]
