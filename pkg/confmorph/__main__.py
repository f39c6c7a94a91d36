"""
Main entry point for confmorph.

Parses the command line, configures logging from ``MORPH_LOG`` and runs the
selected subcommand:
- ``parameterize``: conformal disk map and angle statistics of one mesh
- ``match``: OMT and OMGMF matchings with their energies per keyframe pair
- ``frame``: geodesic frames and the disk partitions they induce
- ``morph``: the reconstructed frame sequence with diagnostics
- ``metrics``: L2/Linf difference and improvement rate of given surfaces

The process exit code is 0 on success, 2 for configuration or input errors,
3 for numerical failures and 1 for anything unexpected.
"""

import sys
from collections.abc import Sequence

from confmorph.factory.parser import create_parser
from confmorph.handlers import COMMANDS
from confmorph.misc.error_handler import EXIT_UNEXPECTED, ErrorHandler, error_handler_decorator
from confmorph.misc.exceptions import ConfigurationError
from confmorph.misc.logger import logger, setup_logger


def main(argv: Sequence[str] | None = None) -> int:
    """
    Run one subcommand and return its exit code.

    Args:
        argv: Arguments without the program name, ``sys.argv[1:]`` by default
    """
    args = create_parser().parse_args(argv)
    error_handler = ErrorHandler()

    try:
        setup_logger()
    except ConfigurationError as error:
        return error_handler.handle_error(error, {"command": args.command})

    command = error_handler_decorator(error_handler)(COMMANDS[args.command])
    try:
        return command(args)
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
