"""``metrics``: surface differences over a shared parametric mesh."""

import argparse
import sys

from confmorph.misc.error_handler import EXIT_OK
from confmorph.services.export import format_csv, write_csv
from confmorph.services.mesh_io import load_mesh, load_parameterization
from confmorph.services.metrics import improvement_rate, surface_diff


def cmd_metrics(args: argparse.Namespace) -> int:
    surface = load_mesh(args.surface)
    reference = load_mesh(args.reference)
    uv = load_parameterization(reference, args.param).image

    header = ["L2", "Linf"]
    row: list[float] = list(surface_diff(surface, reference, uv))
    if args.baseline is not None:
        baseline = load_mesh(args.baseline)
        header.append("improvement_rate")
        row.append(improvement_rate(baseline, surface, reference, uv))

    if args.out is None:
        sys.stdout.write(format_csv(header, [row]))
    else:
        write_csv(args.out, header, [row])
    return EXIT_OK
