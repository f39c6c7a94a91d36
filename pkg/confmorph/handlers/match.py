"""
``match``: Möbius-only (OMT) against Möbius + thin plate (OMGMF) matchings.

For every keyframe pair ``i`` writes ``match_<i>.json`` with the Möbius
parameters and plate coefficients of both matchings, and ``energies_<i>.csv``
with one ``method,E_D,E_loc,E`` row per method.
"""

import argparse
from typing import Any

from confmorph.factory.pipeline import open_pipeline
from confmorph.misc.error_handler import EXIT_OK
from confmorph.misc.logger import logger
from confmorph.models.matching import DiskMatching, MatchingComparison
from confmorph.services.export import write_csv, write_json

ENERGY_HEADER = ("method", "E_D", "E_loc", "E")


def matching_payload(f: DiskMatching) -> dict[str, Any]:
    plate = f.plate
    return {
        "mobius": {"a": [f.mobius.a.real, f.mobius.a.imag], "theta": f.mobius.theta},
        "plate": {
            "n": plate.n,
            "method": plate.method,
            "epsilon": plate.epsilon,
            "residual": plate.residual,
            "centers": plate.centers.tolist(),
            "weights": plate.weights.tolist(),
            "alpha": plate.alpha.tolist(),
        },
        "order": f.order,
    }


def energy_rows(comparison: MatchingComparison) -> list[tuple[str, float, float, float]]:
    return [
        ("OMT", *comparison.omt_energies.as_row()),
        ("OMGMF", *comparison.omgmf_energies.as_row()),
    ]


def cmd_match(args: argparse.Namespace) -> int:
    _, pipeline = open_pipeline(args.config)
    out = pipeline.config.output
    for i, comparison in enumerate(pipeline.comparisons):
        write_json(
            out / f"match_{i}.json",
            {
                "pair": i,
                "times": [pipeline.config.times[i], pipeline.config.times[i + 1]],
                "landmarks": len(pipeline.landmarks[i]),
                "escalations": comparison.escalations,
                "omt": matching_payload(comparison.omt),
                "omgmf": matching_payload(comparison.omgmf),
            },
        )
        write_csv(out / f"energies_{i}.csv", ENERGY_HEADER, energy_rows(comparison))
        logger.info("Pair %d: matchings written to %s", i, out)
    return EXIT_OK
