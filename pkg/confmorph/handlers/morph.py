"""
``morph``: the frame sequence of a keyframe run.

Each requested time is reconstructed from the interpolated signature on the
unified mesh and written as ``frame_<t>.obj``. ``diagnostics.csv`` reports
per frame the reconstruction outcome, the extrapolation and clamping flags
and, for times with a reference surface, the L2/Linf errors. When the
matching comparison is enabled, the Möbius-only variant is reconstructed as
well for those times and the improvement rate of the composite matching over
it is reported.
"""

import argparse
from collections.abc import Sequence
from pathlib import Path

from confmorph.factory.pipeline import MorphPipeline, Variant, open_pipeline
from confmorph.factory.runners import FrameTask, run_frames
from confmorph.misc.error_handler import EXIT_OK
from confmorph.misc.exceptions import ZeroDenominatorError
from confmorph.misc.logger import logger
from confmorph.models.mesh import TriangleMesh
from confmorph.models.problem import ReconstructionProblem, ReconstructionResult
from confmorph.models.track import MorphState
from confmorph.services.export import frame_filename, write_csv
from confmorph.services.mesh_io import load_mesh
from confmorph.services.metrics import improvement_rate, surface_diff

DIAGNOSTICS_HEADER = (
    "t",
    "iterations",
    "displacement",
    "converged",
    "extrapolated",
    "clamped",
    "L2",
    "Linf",
    "L2_omt",
    "Linf_omt",
    "improvement_rate",
)
REFERENCE_TIME_TOL = 1e-9


def frame_tasks(
    pipeline: MorphPipeline,
    times: Sequence[float],
    variant: Variant,
    tol: float | None,
    output: Path | None = None,
) -> tuple[list[FrameTask], list[MorphState]]:
    """Evaluate the homotopy at ``times`` and pose one reconstruction per time."""
    settings = pipeline.config.reconstruction
    homotopy = pipeline.homotopy(variant)
    normals = pipeline.keyframe_normals(variant)
    tasks, states = [], []
    for t in times:
        state = homotopy.evaluate(t)
        problem = ReconstructionProblem.over(state.signature, pipeline.unified, tol, settings.max_iter)
        target = None if output is None else output / frame_filename(t)
        tasks.append(FrameTask(t, variant, problem, normals[pipeline.nearest_keyframe(t)], target))
        states.append(state)
    return tasks, states


def _reference_at(references: dict[float, TriangleMesh], t: float) -> TriangleMesh | None:
    for time, mesh in references.items():
        if abs(time - t) <= REFERENCE_TIME_TOL:
            return mesh
    return None


def diagnostics_rows(
    pipeline: MorphPipeline,
    states: list[MorphState],
    results: list[ReconstructionResult],
    baselines: dict[float, ReconstructionResult],
    references: dict[float, TriangleMesh],
) -> list[tuple]:
    uv = pipeline.unified.image
    rows = []
    for state, result in zip(states, results, strict=True):
        l2 = linf = l2_omt = linf_omt = rate = None
        reference = _reference_at(references, state.t)
        if reference is not None:
            l2, linf = surface_diff(result.mesh, reference, uv)
            baseline = baselines.get(state.t)
            if baseline is not None:
                l2_omt, linf_omt = surface_diff(baseline.mesh, reference, uv)
                try:
                    rate = improvement_rate(baseline.mesh, result.mesh, reference, uv)
                except ZeroDenominatorError:
                    logger.warning("t=%.4f: Möbius-only frame equals the reference, no improvement rate", state.t)
        rows.append(
            (
                state.t,
                result.iterations,
                result.displacement,
                result.converged,
                state.extrapolated,
                state.clamped,
                l2,
                linf,
                l2_omt,
                linf_omt,
                rate,
            )
        )
    return rows


def _remove_partial(paths: Sequence[Path]) -> None:
    removed = 0
    for path in paths:
        if path.exists():
            path.unlink()
            removed += 1
    if removed:
        logger.warning("Removed %d partial output file(s)", removed)


def cmd_morph(args: argparse.Namespace) -> int:
    config, pipeline = open_pipeline(args.config)
    run = pipeline.config
    jobs = args.jobs or config.settings.jobs
    tol = args.tol if args.tol is not None else run.reconstruction.tol
    times = list(dict.fromkeys(run.frames or run.times))
    references = {r.time: load_mesh(r.mesh) for r in run.references}
    outputs = [run.output / frame_filename(t) for t in times] + [run.output / "diagnostics.csv"]

    try:
        tasks, states = frame_tasks(pipeline, times, "omgmf", tol, run.output)
        compared = [t for t in times if _reference_at(references, t) is not None] if run.matching.compare else []
        omt_tasks, _ = frame_tasks(pipeline, compared, "omt", tol) if compared else ([], [])

        results = run_frames(tasks + omt_tasks, jobs)
        baselines = dict(zip(compared, results[len(tasks) :], strict=True))
        rows = diagnostics_rows(pipeline, states, results[: len(tasks)], baselines, references)
        write_csv(run.output / "diagnostics.csv", DIAGNOSTICS_HEADER, rows)
    except Exception:
        if not args.keep_partial:
            _remove_partial(outputs)
        raise

    extrapolated = sum(s.extrapolated for s in states)
    logger.info(
        "Morph finished: %d frame(s) in %s (%d extrapolated, %d compared against a reference)",
        len(times), run.output, extrapolated, sum(_reference_at(references, t) is not None for t in times),
    )
    return EXIT_OK
