"""
``frame``: geodesic frame of the source keyframe of every pair.

Writes ``frame_<i>_partition.obj`` (the disk partition at z = 0),
``frame_<i>_paths.csv`` (one row per frame edge) and ``frame_<i>_points.csv``
(the corrected path points on the surface and in the disk).
"""

import argparse

from confmorph.factory.pipeline import open_pipeline
from confmorph.misc.error_handler import EXIT_OK
from confmorph.misc.logger import logger
from confmorph.services.export import write_csv
from confmorph.services.mesh_io import save_mesh

PATH_HEADER = ("first", "second", "start", "end", "points", "length", "iterations", "converged", "boundary_contact")
POINT_HEADER = ("path", "k", "x", "y", "z", "u", "v")


def cmd_frame(args: argparse.Namespace) -> int:
    _, pipeline = open_pipeline(args.config)
    out = pipeline.config.output
    for i, frame in enumerate(pipeline.frames):
        source = pipeline.keyframes[i]
        save_mesh(frame.partition, out / f"frame_{i}_partition.obj")

        rows, points = [], []
        for k, ((first, second), path) in enumerate(frame.edges):
            rows.append(
                (first, second, path.start, path.end, len(path), path.length, path.iterations, path.converged, path.boundary_contact)
            )
            surface = path.evaluate(source.mesh)
            disk = path.evaluate(source.mesh, source.param.image)
            points += [(k, j, *surface[j], *disk[j]) for j in range(len(path))]
        write_csv(out / f"frame_{i}_paths.csv", PATH_HEADER, rows)
        write_csv(out / f"frame_{i}_points.csv", POINT_HEADER, points)

        unconverged = sum(not p.converged for p in frame.paths)
        if unconverged:
            logger.warning("Pair %d: %d path(s) did not meet the correction tolerance", i, unconverged)
        logger.info(
            "Pair %d: frame of %d paths, partition with %d vertices and %d triangles",
            i, len(frame.paths), frame.partition.n_vertices, frame.partition.n_faces,
        )
    return EXIT_OK
