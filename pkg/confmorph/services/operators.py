"""
Discrete differential operators on triangle meshes.

The cotangent Laplacian ``K`` is assembled positive semidefinite: off-diagonal
entries are -1/2 (cot a + cot b) and the diagonal is the negated row sum. With
``A`` the lumped (one-third one-ring) area, ``-K f / A`` approximates the
Laplace operator of ``f``.

Mean curvature is taken with respect to the orientation normal of the mesh
(the normal of counter-clockwise parametric triangles), so that
``Laplace_s S = 2 H n``. For the lower unit hemisphere parameterized over the
disk this gives ``H = +1``.
"""

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from confmorph.misc.exceptions import AlreadyClosedError, DegenerateFaceError, VanishingConformalFactorError
from confmorph.misc.logger import logger
from confmorph.models.mesh import FloatArray, IntArray, SparseOperator, TriangleMesh, VertexField
from confmorph.models.parameterization import DiskParameterization
from confmorph.models.signature import SurfaceSignature


def cotangent_laplacian(mesh: TriangleMesh, positions: FloatArray | None = None) -> SparseOperator:
    """
    Assemble the cotangent Laplacian of ``mesh`` embedded at ``positions``.

    ``positions`` may be 2D (a parametric embedding) or 3D; the mesh's own
    positions are used by default.

    Raises:
        DegenerateFaceError: If a face has zero area in this embedding
    """
    v = mesh.positions if positions is None else np.asarray(positions, dtype=np.float64)
    if v.shape[1] == 2:
        v = np.column_stack((v, np.zeros(len(v))))
    t = mesh.faces
    n = len(v)

    rows, cols, weights = [], [], []
    cross = mesh.face_cross(v)
    double_area = np.linalg.norm(cross, axis=1)
    scale = np.zeros(len(t))
    for k in range(3):
        scale += np.sum((v[t[:, (k + 1) % 3]] - v[t[:, k]]) ** 2, axis=1)
    degenerate = np.flatnonzero(double_area <= 1e-12 * scale)
    if len(degenerate):
        raise DegenerateFaceError(int(degenerate[0]), "zero area", operation="cotangent_laplacian")

    for k in range(3):
        o, i, j = t[:, k], t[:, (k + 1) % 3], t[:, (k + 2) % 3]
        e1 = v[i] - v[o]
        e2 = v[j] - v[o]
        cot = np.sum(e1 * e2, axis=1) / double_area
        rows.extend((i, j))
        cols.extend((j, i))
        weights.extend((-0.5 * cot, -0.5 * cot))

    off = sparse.csr_matrix(
        (np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    diagonal = -np.asarray(off.sum(axis=1)).ravel()
    return (off + sparse.diags(diagonal)).tocsr()


def lumped_area(mesh: TriangleMesh, positions: FloatArray | None = None) -> VertexField:
    return mesh.vertex_areas(positions)


def conformal_factor(mesh: TriangleMesh, param: DiskParameterization | FloatArray) -> VertexField:
    """
    Per-vertex ``sqrt(A_3d / A_2d)`` from one-ring areas.

    Raises:
        VanishingConformalFactorError: If a parametric one-ring has zero area
    """
    image = param.image if isinstance(param, DiskParameterization) else np.asarray(param)
    area_3d = mesh.vertex_areas()
    area_2d = mesh.vertex_areas(image)
    bad = np.flatnonzero(area_2d <= 0.0)
    if len(bad):
        raise VanishingConformalFactorError(int(bad[0]), "conformal_factor")
    return np.sqrt(area_3d / area_2d)


def mean_curvature(mesh: TriangleMesh, param: DiskParameterization) -> VertexField:
    """
    Mean curvature from the parametric Laplacian of the coordinate functions.

    Interior values are ``-<(K S)_i, n_i> / (2 lambda_i^2 A_i)`` with ``K`` and
    ``A`` taken on the parametric triangulation; boundary vertices copy the value
    of their nearest interior vertex (by surface edge length).

    Raises:
        VanishingConformalFactorError: If lambda vanishes at an interior vertex
    """
    stiffness = cotangent_laplacian(mesh, param.image)
    area = mesh.vertex_areas(param.image)
    lam = param.lam
    interior = mesh.interior
    bad = interior[(lam[interior] <= 0.0) | (area[interior] <= 0.0)]
    if len(bad):
        raise VanishingConformalFactorError(int(bad[0]), "mean_curvature")

    normals = mesh.vertex_normals()
    laplace = stiffness @ mesh.positions
    h = np.zeros(mesh.n_vertices)
    h[interior] = -np.sum(laplace[interior] * normals[interior], axis=1) / (
        2.0 * lam[interior] ** 2 * area[interior]
    )
    if len(mesh.boundary):
        h[mesh.boundary] = h[nearest_interior(mesh)[mesh.boundary]] if len(interior) else 0.0
    return h


def surface_signature(mesh: TriangleMesh, param: DiskParameterization) -> SurfaceSignature:
    """(H, lambda), boundary curve and vertex colours of a parameterized mesh."""
    return SurfaceSignature(
        mean_curvature(mesh, param),
        np.array(param.lam, dtype=np.float64),
        np.array(mesh.positions[mesh.boundary]),
        None if mesh.colors is None else np.array(mesh.colors),
    )


def nearest_interior(mesh: TriangleMesh) -> IntArray:
    """For every vertex, the interior vertex closest along mesh edges (itself when interior)."""
    interior = mesh.interior
    if len(interior) == 0:
        return np.arange(mesh.n_vertices)
    e = mesh.edges
    length = np.linalg.norm(mesh.positions[e[:, 0]] - mesh.positions[e[:, 1]], axis=1)
    graph = sparse.csr_matrix((length, (e[:, 0], e[:, 1])), shape=(mesh.n_vertices, mesh.n_vertices))
    _, _, sources = csgraph.dijkstra(
        graph, directed=False, indices=interior, min_only=True, return_predecessors=True
    )
    return sources.astype(np.int64)


def mirror_index(mesh: TriangleMesh) -> IntArray:
    """Index of every vertex's copy in :func:`double_cover` (boundary vertices are shared)."""
    index = np.arange(mesh.n_vertices)
    interior = mesh.interior
    index[interior] = mesh.n_vertices + np.arange(len(interior))
    return index


def double_cover(mesh: TriangleMesh) -> TriangleMesh:
    """
    Glue ``mesh`` to an orientation-reversed copy of itself along its boundary.

    The result has ``2 V - B`` vertices; vertex ``i < V`` is the original vertex
    and copies of interior vertices follow in interior order.

    Raises:
        AlreadyClosedError: If the mesh has no boundary
    """
    if mesh.is_closed:
        raise AlreadyClosedError()
    mirror = mirror_index(mesh)
    positions = np.vstack((mesh.positions, mesh.positions[mesh.interior]))
    colors = None if mesh.colors is None else np.vstack((mesh.colors, mesh.colors[mesh.interior]))
    faces = np.vstack((mesh.faces, mirror[mesh.faces][:, [0, 2, 1]]))
    closed = TriangleMesh(positions, faces, colors)
    logger.debug("Double cover: %d vertices, Euler characteristic %d", closed.n_vertices, closed.euler())
    return closed
