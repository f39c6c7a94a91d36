"""
Command-line surface of confmorph.

One subcommand per pipeline stage. Commands working on a whole morphing run
take ``--config``; the single-mesh commands take their inputs positionally.
"""

import argparse
from pathlib import Path

from confmorph import __version__


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def _positive_float(value: str) -> float:
    number = float(value)
    if not number > 0.0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {value}")
    return number


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="confmorph",
        description="Conformal surface morphing: parameterize, match, frame and morph keyframe meshes.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--config", type=Path, required=True, help="pipeline JSON document")

    parameterize = commands.add_parser("parameterize", help="map a disk-like mesh conformally onto the unit disk")
    parameterize.add_argument("mesh", type=Path, help="OBJ or PLY mesh with one boundary loop")
    parameterize.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parameterize.add_argument("--bin-width", type=_positive_float, default=1.0, help="histogram bin width in degrees")
    parameterize.add_argument("--config", type=Path, default=None, help="pipeline JSON to take QIEM settings from")

    commands.add_parser("match", parents=[run], help="fit and compare the OMT and OMGMF matchings per keyframe pair")
    commands.add_parser("frame", parents=[run], help="build the geodesic frame of every source keyframe")

    morph = commands.add_parser("morph", parents=[run], help="reconstruct the frame sequence")
    morph.add_argument("--jobs", type=_positive_int, default=None, help="frames reconstructed concurrently")
    morph.add_argument("--keep-partial", action="store_true", help="keep written frames when the run fails")
    morph.add_argument("--tol", type=_positive_float, default=None, help="reconstruction displacement tolerance")

    metrics = commands.add_parser("metrics", help="L2/Linf difference of two surfaces over one parametric mesh")
    metrics.add_argument("surface", type=Path)
    metrics.add_argument("reference", type=Path)
    metrics.add_argument("--param", type=Path, required=True, help="u,v,lambda table of the shared mesh")
    metrics.add_argument("--baseline", type=Path, default=None, help="baseline surface for the improvement rate")
    metrics.add_argument("--out", type=Path, default=None, help="CSV file; printed to stdout when omitted")
    return parser
