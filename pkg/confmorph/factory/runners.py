from __future__ import annotations

import asyncio
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

from confmorph.misc.logger import logger
from confmorph.services.mesh_io import save_mesh
from confmorph.services.reconstruction import reconstruct

if TYPE_CHECKING:
    from confmorph.models.mesh import FloatArray
    from confmorph.models.problem import ReconstructionProblem, ReconstructionResult


@dataclass(frozen=True, eq=False)
class FrameTask:
    """
    One frame to reconstruct.

    ``init_normals`` warm-start the iteration; when ``output`` is set the
    frame is written there as soon as it is reconstructed.
    """

    t: float
    variant: str
    problem: ReconstructionProblem
    init_normals: FloatArray | None = field(default=None, repr=False)
    output: Path | None = None


def reconstruct_frame(task: FrameTask) -> ReconstructionResult:
    result = reconstruct(task.problem, task.init_normals)
    if task.output is not None:
        save_mesh(result.mesh, task.output)
        logger.info("Frame t=%.4f written to %s", task.t, task.output.name)
    return result


async def _run_one(task: FrameTask, semaphore: asyncio.Semaphore) -> ReconstructionResult:
    async with semaphore:
        logger.debug("Reconstructing %s frame t=%.4f", task.variant, task.t)
        return await asyncio.to_thread(reconstruct_frame, task)


async def reconstruct_frames(tasks: Sequence[FrameTask], jobs: int = 1) -> list[ReconstructionResult]:
    """Reconstruct all ``tasks`` with at most ``jobs`` running at once; results keep task order."""
    semaphore = asyncio.Semaphore(max(1, jobs))
    results = await asyncio.gather(*(_run_one(task, semaphore) for task in tasks))
    logger.info("Reconstructed %d frame(s) with %d worker(s)", len(results), jobs)
    return list(results)


def run_frames(tasks: Sequence[FrameTask], jobs: int = 1) -> list[ReconstructionResult]:
    return asyncio.run(reconstruct_frames(tasks, jobs))
