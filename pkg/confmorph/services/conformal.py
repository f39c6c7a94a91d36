"""
Conformal parameterization.

Closed genus-0 meshes are mapped to the unit sphere by the harmonic-map heat
flow, stepped with the quasi-implicit Euler scheme

    [I + dt (K - D)] phi' = phi,    D_ii = <(K phi)_i, phi_i>,

followed by a projection of every image vertex back onto the sphere. Open
disk-like meshes are double covered, mapped to the sphere, cut along the
equator and projected stereographically onto the unit disk.
"""

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from confmorph.config import QiemSettings
from confmorph.misc.exceptions import (
    BoundaryLoopError,
    EnergyIncreaseError,
    EquatorSeparationError,
    FoldOverError,
    QiemSolveError,
    ZeroNormalError,
)
from confmorph.misc.logger import logger
from confmorph.models.mesh import FloatArray, IntArray, TriangleMesh
from confmorph.models.parameterization import AngleDistortion, DiskParameterization, MobiusDisk, SphereMap
from confmorph.services.mobius import (
    ball_automorphism,
    mobius_disk_apply,
    normalize_rows,
    plane_to_sphere,
    rotation_between,
    stereographic_to_plane,
)
from confmorph.services.operators import conformal_factor, cotangent_laplacian, double_cover, mirror_index

ENERGY_SLACK = 1e-8
MIN_SPHERE_AREA = 1e-14
EQUATOR_TOLERANCE = 1e-3
CENTROID_ROUNDS = 100


def gauss_map(mesh: TriangleMesh) -> SphereMap:
    """
    Map every vertex to its area-weighted unit normal.

    Raises:
        ZeroNormalError: If the face normals around a vertex cancel
    """
    summed = mesh.vertex_faces @ mesh.face_cross()
    length = np.linalg.norm(summed, axis=1)
    bad = np.flatnonzero(length <= 1e-14 * max(float(length.max()), 1e-300))
    if len(bad):
        raise ZeroNormalError(int(bad[0]))
    return SphereMap(mesh, summed / length[:, np.newaxis])


def harmonic_energy(stiffness: sparse.csr_matrix, image: FloatArray) -> float:
    """Sum over the coordinates of phi^T K phi."""
    return float(np.sum(image * (stiffness @ image)))


def sphere_face_check(mesh: TriangleMesh, image: FloatArray) -> IntArray:
    """Faces whose spherical image is inverted or degenerate."""
    a, b, c = image[mesh.faces[:, 0]], image[mesh.faces[:, 1]], image[mesh.faces[:, 2]]
    triple = np.einsum("ij,ij->i", a, np.cross(b, c))
    area = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    return np.flatnonzero((triple <= 0.0) | (area <= MIN_SPHERE_AREA))


def centroid_normalize(mesh: TriangleMesh, image: FloatArray, tol: float) -> FloatArray:
    """
    Compose with ball automorphisms until the area-weighted centroid of the image
    lies within ``tol`` of the origin.
    """
    for _ in range(CENTROID_ROUNDS):
        weights = mesh.vertex_areas(image)
        centroid = weights @ image / weights.sum()
        if np.linalg.norm(centroid) < tol:
            break
        image = normalize_rows(ball_automorphism(centroid, image))
    return image


def spherical_conformal_qiem(
    mesh: TriangleMesh,
    init: SphereMap,
    dt: float | None = None,
    tol: float = 1e-7,
    max_iter: int = 500,
    *,
    dt_max: float = 10.0,
    max_halvings: int = 20,
) -> SphereMap:
    """
    Run the quasi-implicit heat flow from ``init`` until the largest vertex
    displacement of a step drops below ``tol``.

    Accepted steps never increase the harmonic energy: a step that raises it by
    more than a relative 1e-8 is retried with half the step size. The image is
    Möbius-normalized to a centred area-weighted centroid before and after the
    flow. Hitting ``max_iter`` is not an error; the result is flagged
    ``converged=False``.

    Raises:
        QiemSolveError: If a linear system is singular
        EnergyIncreaseError: If 'max_halvings' halvings cannot restore descent
        FoldOverError: If the final map has inverted or degenerate triangles
    """
    stiffness = cotangent_laplacian(mesh)
    identity = sparse.identity(mesh.n_vertices, format="csc")
    step = mesh.mean_edge_length() ** 2 if dt is None else dt

    phi = centroid_normalize(mesh, normalize_rows(np.asarray(init.image, dtype=np.float64)), tol)
    energy = harmonic_energy(stiffness, phi)
    energies = [energy]
    converged = False
    iteration = 0
    logger.debug("QIEM start: %d vertices, energy %.9e, dt %.3e", mesh.n_vertices, energy, step)

    while iteration < max_iter:
        iteration += 1
        diagonal = np.sum((stiffness @ phi) * phi, axis=1)
        for halving in range(max_halvings + 1):
            system = (identity + step * (stiffness - sparse.diags(diagonal))).tocsc()
            try:
                candidate = splinalg.splu(system).solve(phi)
            except RuntimeError as e:
                raise QiemSolveError(iteration, str(e)) from e
            if not np.all(np.isfinite(candidate)):
                raise QiemSolveError(iteration, "non-finite solution")
            candidate = normalize_rows(candidate)
            candidate_energy = harmonic_energy(stiffness, candidate)
            if candidate_energy <= energy + ENERGY_SLACK * abs(energy):
                break
            if halving == max_halvings:
                raise EnergyIncreaseError(iteration, candidate_energy, energy, max_halvings)
            step *= 0.5
        displacement = float(np.max(np.linalg.norm(candidate - phi, axis=1)))
        phi, energy = candidate, candidate_energy
        energies.append(energy)
        logger.debug("QIEM %d: energy %.12e, displacement %.3e, dt %.3e", iteration, energy, displacement, step)
        if displacement < tol:
            converged = True
            break
        step = min(step * 1.2, dt_max)

    phi = centroid_normalize(mesh, phi, tol)
    folded = sphere_face_check(mesh, phi)
    if len(folded):
        raise FoldOverError(folded.tolist())
    if not converged:
        logger.warning("QIEM stopped at max_iter=%d before reaching tol=%.1e", max_iter, tol)
    else:
        logger.info("QIEM converged in %d iterations, energy %.9e", iteration, energy)
    return SphereMap(mesh, phi, tuple(energies), iteration, converged, step)


def spherical_conformal_map(mesh: TriangleMesh, settings: QiemSettings | None = None) -> SphereMap:
    """Gauss map followed by the heat flow, for closed genus-0 meshes."""
    settings = settings or QiemSettings()
    if not mesh.is_closed:
        raise BoundaryLoopError(1, "a closed mesh", operation="spherical_conformal_map")
    return spherical_conformal_qiem(
        mesh,
        gauss_map(mesh),
        settings.dt,
        settings.tol,
        settings.max_iter,
        dt_max=settings.dt_max,
        max_halvings=settings.max_halvings,
    )


def harmonic_disk_map(mesh: TriangleMesh) -> FloatArray:
    """
    Harmonic map onto the unit disk with the boundary loop placed by arc length.

    Cotangent weights are tried first; if they fold a triangle the uniform
    (Tutte) weights are used, which always embed.
    """
    loop = mesh.boundary
    closed_loop = mesh.positions[np.append(loop, loop[0])]
    arc = np.concatenate(([0.0], np.cumsum(np.linalg.norm(np.diff(closed_loop, axis=0), axis=1))))
    angles = 2.0 * np.pi * arc[:-1] / arc[-1]
    boundary_uv = np.column_stack((np.cos(angles), np.sin(angles)))

    interior = mesh.interior
    image = np.zeros((mesh.n_vertices, 2))
    image[loop] = boundary_uv
    if len(interior) == 0:
        return image

    uniform = mesh.adj_sym.copy()
    uniform.data[:] = -1.0
    uniform = (uniform + sparse.diags(-np.asarray(uniform.sum(axis=1)).ravel())).tocsr()
    for weights in (cotangent_laplacian(mesh), uniform):
        inner = weights[interior][:, interior].tocsc()
        coupling = weights[interior][:, loop]
        try:
            solve = splinalg.factorized(inner)
        except RuntimeError:
            continue
        rhs = -(coupling @ boundary_uv)
        image[interior] = np.column_stack((solve(rhs[:, 0]), solve(rhs[:, 1])))
        if np.all(signed_areas(mesh, image) > 0.0):
            return image
        logger.debug("Harmonic disk map folds, retrying with uniform weights")
    return image


def signed_areas(mesh: TriangleMesh, image: FloatArray) -> FloatArray:
    a, b, c = image[mesh.faces[:, 0]], image[mesh.faces[:, 1]], image[mesh.faces[:, 2]]
    return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))


def _boundary_only_map(mesh: TriangleMesh) -> DiskParameterization:
    """Disk map of a mesh without interior vertices: the boundary loop on the unit circle by arc length."""
    plane = harmonic_disk_map(mesh)
    if signed_areas(mesh, plane).sum() < 0:
        plane[:, 1] = -plane[:, 1]
    logger.info("Disk map of %d vertices, all on the boundary: arc-length placement", mesh.n_vertices)
    return DiskParameterization(mesh, plane, conformal_factor(mesh, plane))


def riemann_disk_map(mesh: TriangleMesh, settings: QiemSettings | None = None) -> DiskParameterization:
    """
    Conformally map an open disk-like mesh onto the unit disk.

    The mesh is double covered and the flow starts from a lift of a harmonic
    disk map: the original sheet to the upper hemisphere, the mirrored copy to
    the lower one. After the flow the sphere is rotated so that the plane
    through the boundary image is the equator with the original sheet below,
    projected stereographically, scaled so the boundary lies on the unit circle
    and reflected if needed so parametric triangles are counter-clockwise.
    A mesh without interior vertices skips the flow and keeps its arc-length
    boundary placement.

    Raises:
        BoundaryLoopError: If the mesh is closed
        EquatorSeparationError: If the boundary image is not a planar circle
        FoldOverError: If a parametric triangle is inverted
    """
    settings = settings or QiemSettings()
    if mesh.is_closed:
        raise BoundaryLoopError(0, "one boundary loop", operation="riemann_disk_map")
    if len(mesh.interior) == 0:
        return _boundary_only_map(mesh)

    closed = double_cover(mesh)
    mirror = mirror_index(mesh)
    disk = harmonic_disk_map(mesh)
    upper = plane_to_sphere(disk) * np.array([1.0, 1.0, -1.0])
    init = np.zeros((closed.n_vertices, 3))
    init[: mesh.n_vertices] = upper
    init[mirror] = upper * np.array([1.0, 1.0, -1.0])
    init[mesh.boundary] = upper[mesh.boundary]

    sphere = spherical_conformal_qiem(
        closed,
        SphereMap(closed, init),
        settings.dt,
        settings.tol,
        settings.max_iter,
        dt_max=settings.dt_max,
        max_halvings=settings.max_halvings,
    )
    image = sphere.image
    loop = mesh.boundary

    # plane through the boundary image, oriented toward the original sheet
    ring = image[loop]
    center = ring.mean(axis=0)
    _, _, vt = np.linalg.svd(ring - center)
    normal = vt[2]
    sheet = image[mesh.interior].mean(axis=0) if len(mesh.interior) else -center
    if (sheet - center) @ normal < 0:
        normal = -normal
    rotated = image[: mesh.n_vertices] @ rotation_between(normal, np.array([0.0, 0.0, -1.0])).T

    plane = stereographic_to_plane(rotated)
    radii = np.linalg.norm(plane[loop], axis=1)
    deviation = float(np.max(np.abs(radii / radii.mean() - 1.0)))
    if deviation > EQUATOR_TOLERANCE:
        raise EquatorSeparationError(deviation)
    plane /= radii.mean()
    plane[loop] /= np.linalg.norm(plane[loop], axis=1)[:, np.newaxis]
    if len(mesh.interior) and np.max(np.linalg.norm(plane[mesh.interior], axis=1)) >= 1.0:
        raise EquatorSeparationError(float(np.max(np.linalg.norm(plane[mesh.interior], axis=1)) - 1.0))

    areas = signed_areas(mesh, plane)
    if areas.sum() < 0:
        plane[:, 1] = -plane[:, 1]
        areas = -areas
    folded = np.flatnonzero(areas <= 0.0)
    if len(folded):
        raise FoldOverError(folded.tolist(), operation="riemann_disk_map")

    param = DiskParameterization(mesh, plane, conformal_factor(mesh, plane), sphere)
    logger.info(
        "Disk map of %d vertices after %d heat-flow iterations (boundary deviation %.2e)",
        mesh.n_vertices, sphere.iterations, deviation,
    )
    return param


def apply_mobius(param: DiskParameterization, m: MobiusDisk) -> DiskParameterization:
    """Compose a parameterization with a disk automorphism and refresh lambda."""
    image = mobius_disk_apply(m, param.image)
    loop = param.mesh.boundary
    image[loop] /= np.linalg.norm(image[loop], axis=1)[:, np.newaxis]
    return DiskParameterization(param.mesh, image, conformal_factor(param.mesh, image), param.sphere)


def corner_angles(mesh: TriangleMesh, positions: FloatArray) -> FloatArray:
    """(F, 3) interior angles in radians, column k at corner k."""
    v = positions if positions.shape[1] == 3 else np.column_stack((positions, np.zeros(len(positions))))
    t = mesh.faces
    angles = np.empty(t.shape)
    for k in range(3):
        e1 = v[t[:, (k + 1) % 3]] - v[t[:, k]]
        e2 = v[t[:, (k + 2) % 3]] - v[t[:, k]]
        angles[:, k] = np.arctan2(np.linalg.norm(np.cross(e1, e2), axis=1), np.sum(e1 * e2, axis=1))
    return angles


def angle_distortion(mesh: TriangleMesh, param: DiskParameterization, bin_width: float = 1.0) -> AngleDistortion:
    """Histogram of |angle_3d - angle_2d| over all face corners, in degrees."""
    diff = np.degrees(np.abs(corner_angles(mesh, mesh.positions) - corner_angles(mesh, param.image))).ravel()
    edges = np.arange(0.0, 180.0 + bin_width, bin_width)
    counts, edges = np.histogram(diff, bins=edges)
    return AngleDistortion(
        bin_edges=edges,
        counts=counts,
        mean=float(diff.mean()),
        p95=float(np.percentile(diff, 95)),
        max=float(diff.max()),
        per_corner=diff,
    )
