"""
Surface reconstruction from a signature.

Fixed-point iteration on the Dirichlet problem ``K S = -2 H lam^2 A n`` over
the parametric disk mesh: solve with the current normals, recompute unit
normals from the new embedding, repeat until the largest vertex displacement
drops below the tolerance. The interior block of ``K`` is factorized once per
parametric mesh and shared between frames.
"""

import threading
from dataclasses import dataclass
from hashlib import blake2b

import numpy as np
from cachetools import LRUCache, cached
from cachetools.keys import hashkey
from scipy import sparse
from scipy.sparse.linalg import SuperLU, splu

from confmorph.misc.exceptions import DivergenceError, SingularSystemError
from confmorph.misc.logger import logger
from confmorph.models.mesh import FloatArray, IntArray, TriangleMesh
from confmorph.models.problem import ReconstructionProblem, ReconstructionResult
from confmorph.services.operators import cotangent_laplacian

UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class InteriorSystem:
    """Factorized interior block of the parametric Laplacian and its coupling to the boundary."""

    interior: IntArray
    coupling: sparse.csr_matrix
    lu: SuperLU | None

    def solve(self, rhs: FloatArray) -> FloatArray:
        if self.lu is None:
            return np.empty((0, rhs.shape[1]))
        return self.lu.solve(np.ascontiguousarray(rhs))


def _system_key(mesh: TriangleMesh, boundary: IntArray) -> tuple:
    digest = blake2b(mesh.positions.tobytes(), digest_size=16).hexdigest()
    return hashkey(mesh.fingerprint, digest, boundary.tobytes())


@cached(LRUCache(maxsize=8), key=_system_key, lock=threading.Lock())
def interior_system(mesh: TriangleMesh, boundary: IntArray) -> InteriorSystem:
    """
    Factorize the interior rows of the cotangent Laplacian of ``mesh``.

    Raises:
        SingularSystemError: If the interior block is singular
    """
    K = cotangent_laplacian(mesh)
    fixed = np.zeros(mesh.n_vertices, dtype=bool)
    fixed[boundary] = True
    interior = np.flatnonzero(~fixed)
    if len(boundary) == 0:
        raise SingularSystemError("no Dirichlet vertices")
    if len(interior) == 0:
        return InteriorSystem(interior, sparse.csr_matrix((0, len(boundary))), None)
    K_II = K[interior][:, interior].tocsc()
    try:
        lu = splu(K_II)
    except RuntimeError as e:
        raise SingularSystemError(str(e)) from e
    logger.debug("Factorized interior Laplacian with %d unknowns", len(interior))
    return InteriorSystem(interior, K[interior][:, boundary].tocsr(), lu)


def _unit_normals(mesh: TriangleMesh, positions: FloatArray, previous: FloatArray) -> FloatArray:
    normals = mesh.vertex_normals(positions)
    zero = np.linalg.norm(normals, axis=1) == 0.0
    normals[zero] = previous[zero]
    return normals


def reconstruct(problem: ReconstructionProblem, init_normals: FloatArray | None = None) -> ReconstructionResult:
    """
    Rebuild the surface of ``problem``.

    ``init_normals`` default to (0, 0, 1) everywhere. From the second
    iteration on the displacement must not grow; reaching ``max_iter``
    returns the last iterate with ``converged=False``.

    Raises:
        SingularSystemError: If the interior system cannot be factorized
        DivergenceError: If the displacement grows after the second iteration
    """
    mesh = problem.param_mesh
    boundary = np.asarray(problem.boundary, dtype=np.int64)
    system = interior_system(mesh, boundary)
    interior = system.interior
    sig = problem.signature

    weight = -2.0 * np.asarray(sig.H) * np.asarray(sig.lam) ** 2 * mesh.vertex_areas()
    S = np.zeros((mesh.n_vertices, 3))
    S[boundary] = sig.boundary_positions
    coupled = -(system.coupling @ S[boundary])
    S[interior] = system.solve(coupled)

    normals = np.tile(UP, (mesh.n_vertices, 1)) if init_normals is None else np.array(init_normals, dtype=np.float64)
    tol = problem.tolerance
    history: list[float] = []
    converged = False
    for iteration in range(1, problem.max_iter + 1):
        new = S.copy()
        new[interior] = system.solve(weight[interior, np.newaxis] * normals[interior] + coupled)
        displacement = float(np.linalg.norm(new - S, axis=1).max())
        history.append(displacement)
        S = new
        normals = _unit_normals(mesh, S, normals)
        logger.debug("Reconstruction iteration %d: displacement %.3e", iteration, displacement)
        if displacement < tol:
            converged = True
            break
        # the first step starts from the initial normals
        if iteration > 2 and displacement > history[-2]:
            raise DivergenceError(history)

    if not converged:
        logger.warning(
            "Reconstruction stopped after %d iterations, displacement %.3e > %.3e", len(history), history[-1], tol
        )
    logger.info("Reconstructed %d vertices in %d iterations", mesh.n_vertices, len(history))
    result_mesh = TriangleMesh(S, mesh.faces, sig.colors)
    return ReconstructionResult(result_mesh, len(history), tuple(history), converged, normals)
