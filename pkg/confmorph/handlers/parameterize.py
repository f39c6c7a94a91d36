"""
``parameterize``: conformal disk map of one mesh.

Writes ``<stem>_param.csv`` (``u,v,lambda`` per vertex) and the angle
distortion histogram ``<stem>_angles.csv`` with its ``_summary`` companion.
"""

import argparse

from confmorph.config import create_config
from confmorph.misc.error_handler import EXIT_OK
from confmorph.misc.logger import logger
from confmorph.services.conformal import angle_distortion, riemann_disk_map
from confmorph.services.export import write_angle_histogram
from confmorph.services.mesh_io import load_mesh, save_parameterization


def cmd_parameterize(args: argparse.Namespace) -> int:
    config = create_config(args.config)
    qiem = config.pipeline.qiem if config.pipeline is not None else None

    mesh = load_mesh(args.mesh)
    param = riemann_disk_map(mesh, qiem)
    stats = angle_distortion(mesh, param, args.bin_width)

    stem = args.mesh.stem
    save_parameterization(param, args.out / f"{stem}_param.csv")
    write_angle_histogram(args.out / f"{stem}_angles.csv", stats)
    logger.info(
        "Angle distortion of %s: mean %.3f deg, p95 %.3f deg, max %.3f deg", args.mesh.name, stats.mean, stats.p95, stats.max
    )
    return EXIT_OK
