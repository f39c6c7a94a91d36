"""
Piecewise-affine registration between two parameterized surfaces.

The source frame's partition is pushed through the disk matching vertex by
vertex; every other disk point follows the affine map of the partition
triangle containing it. Points on the unit circle follow the boundary
correspondence instead.
"""

from collections.abc import Callable

import numpy as np

from confmorph.misc.exceptions import FoldedPartitionError, ValidationError
from confmorph.misc.logger import logger
from confmorph.models.frame import GeodesicFrame
from confmorph.models.matching import DiskMatching, LandmarkSet
from confmorph.models.mesh import FloatArray, IntArray, VertexField
from confmorph.models.parameterization import DiskParameterization
from confmorph.models.signature import BOUNDARY_RADIUS, BoundaryCorrespondence, RegistrationMap, SurfaceSignature
from confmorph.services.locate import TriangleLocator
from confmorph.services.matching import matching_eval
from confmorph.services.mobius import mobius_disk_apply

TWO_PI = 2.0 * np.pi


def _angles(points: FloatArray) -> FloatArray:
    return np.mod(np.arctan2(points[:, 1], points[:, 0]), TWO_PI)


def _unclamped(f: DiskMatching) -> Callable[[FloatArray], FloatArray]:
    def apply(points: FloatArray) -> FloatArray:
        return mobius_disk_apply(f.mobius, points + f.plate.displacement(points))

    return apply


def boundary_correspondence(
    f: DiskMatching,
    pa: DiskParameterization | None = None,
    pb: DiskParameterization | None = None,
    lm: LandmarkSet | None = None,
) -> BoundaryCorrespondence:
    """
    Circle-to-circle map for the boundary vertices.

    Landmark pairs that are boundary vertices on both meshes anchor the map,
    which is linear in angle between consecutive anchors. Without usable
    anchors the matching itself is applied and projected onto the circle.
    """
    fallback = BoundaryCorrespondence(fallback=_unclamped(f))
    if lm is None or pa is None or pb is None:
        return fallback
    on_a = np.isin(lm.source_index, pa.mesh.boundary)
    on_b = np.isin(lm.target_index, pb.mesh.boundary)
    anchors = np.flatnonzero(on_a & on_b)
    if len(anchors) == 0:
        return fallback

    source = _angles(pa.image[lm.source_index[anchors]])
    target = _angles(pb.image[lm.target_index[anchors]])
    order = np.argsort(source)
    source, target = source[order], target[order]
    steps = np.mod(np.diff(target), TWO_PI)
    unwrapped = target[0] + np.concatenate(([0.0], np.cumsum(steps)))
    if np.any(np.diff(source) <= 0.0) or np.any(steps <= 0.0) or unwrapped[-1] >= target[0] + TWO_PI:
        logger.warning("Boundary anchors are not in cyclic order, using the matching on the boundary")
        return fallback
    logger.debug("Boundary correspondence anchored at %d landmark pair(s)", len(anchors))
    return BoundaryCorrespondence(source, unwrapped)


def build_registration(
    pa: DiskParameterization,
    pb: DiskParameterization,
    frame_a: GeodesicFrame,
    f: DiskMatching,
    boundary: BoundaryCorrespondence | None = None,
) -> RegistrationMap:
    """
    Registration map from ``pa``'s disk to ``pb``'s disk.

    Partition vertices take the matched images ``f(V)`` (circle vertices the
    boundary correspondence); every vertex of ``pa``'s mesh is located in the
    partition once and its image cached.

    Raises:
        FoldedPartitionError: If a matched partition triangle is inverted
        PointLocationError: If a source vertex lies outside the partition
    """
    boundary = boundary or boundary_correspondence(f)
    vertices = frame_a.partition_vertices
    faces = frame_a.partition.faces
    on_circle = np.linalg.norm(vertices, axis=1) >= BOUNDARY_RADIUS

    targets = np.empty_like(vertices)
    if (~on_circle).any():
        targets[~on_circle] = matching_eval(f, vertices[~on_circle])
    if on_circle.any():
        targets[on_circle] = boundary(vertices[on_circle])

    tri = targets[faces]
    signed = (tri[:, 1, 0] - tri[:, 0, 0]) * (tri[:, 2, 1] - tri[:, 0, 1]) - (tri[:, 1, 1] - tri[:, 0, 1]) * (
        tri[:, 2, 0] - tri[:, 0, 0]
    )
    folded = np.flatnonzero(signed <= 0.0)
    if len(folded):
        raise FoldedPartitionError(folded.tolist())

    locator = TriangleLocator(vertices, faces)
    source_faces, source_coords = locator.locate_many(pa.image, clamp=True, operation="build_registration")
    images = np.einsum("nk,nkc->nc", source_coords, targets[faces[source_faces]])
    circle = np.linalg.norm(pa.image, axis=1) >= BOUNDARY_RADIUS
    if circle.any():
        images[circle] = boundary(pa.image[circle])

    logger.info(
        "Registration: %d partition triangles, %d source vertices located", len(faces), len(source_faces)
    )
    return RegistrationMap(
        vertices, faces, targets, boundary, locator, source_faces, source_coords, images, pa.mesh.boundary.copy()
    )


def sample_field(
    pb: DiskParameterization,
    values: FloatArray,
    points: FloatArray,
    locator: TriangleLocator | None = None,
    operation: str = "transfer_signature",
) -> FloatArray:
    """
    Per-vertex ``values`` of ``pb`` sampled at disk ``points``.

    Points on the unit circle are interpolated along ``pb``'s boundary loop
    by angle; the others barycentrically in ``pb``'s parametric triangulation.
    """
    values = np.asarray(values, dtype=np.float64)
    points = np.atleast_2d(points)
    out = np.empty((len(points), *values.shape[1:]))
    on_circle = np.linalg.norm(points, axis=1) >= BOUNDARY_RADIUS
    if on_circle.any():
        out[on_circle] = _along_boundary(pb, values[pb.mesh.boundary], points[on_circle])
    if (~on_circle).any():
        locator = locator or TriangleLocator(pb.image, pb.mesh.faces)
        out[~on_circle] = locator.interpolate(values, points[~on_circle], clamp=True, operation=operation)
    return out


def _along_boundary(pb: DiskParameterization, loop_values: FloatArray, points: FloatArray) -> FloatArray:
    """Values given along ``pb``'s boundary loop, interpolated periodically in angle."""
    angles = _angles(pb.image[pb.mesh.boundary])
    order = np.argsort(angles)
    query = _angles(points)
    loop_values = loop_values[order]
    if loop_values.ndim == 1:
        return np.interp(query, angles[order], loop_values, period=TWO_PI)
    return np.column_stack(
        [np.interp(query, angles[order], loop_values[:, k], period=TWO_PI) for k in range(loop_values.shape[1])]
    )


def _images(reg: RegistrationMap, images: FloatArray | None) -> FloatArray:
    return reg.images if images is None else np.atleast_2d(images)


def transfer_signature(
    reg: RegistrationMap,
    sig_b: SurfaceSignature,
    pb: DiskParameterization,
    images: FloatArray | None = None,
    boundary: IntArray | None = None,
) -> SurfaceSignature:
    """
    Pull ``sig_b`` back through the registration onto the unified mesh.

    ``images`` are the disk images of the unified vertices (default: the
    registration's cache) and ``boundary`` the unified boundary loop.

    Raises:
        ValidationError: If ``sig_b`` does not live on ``pb``'s mesh
        PointLocationError: If an image lies outside ``pb``'s domain
    """
    if sig_b.n_vertices != pb.mesh.n_vertices or len(sig_b.boundary_positions) != len(pb.mesh.boundary):
        raise ValidationError(
            "signature does not match the target mesh",
            field="sig_b",
            value=sig_b.n_vertices,
            operation="transfer_signature",
        )
    images = _images(reg, images)
    boundary = reg.source_boundary if boundary is None else boundary
    locator = TriangleLocator(pb.image, pb.mesh.faces)
    H = sample_field(pb, sig_b.H, images, locator)
    lam = sample_field(pb, sig_b.lam, images, locator)
    boundary_positions = _along_boundary(pb, sig_b.boundary_positions, images[boundary])
    colors = None
    if sig_b.colors is not None:
        colors = np.clip(sample_field(pb, sig_b.colors, images, locator), 0.0, 1.0)
    return SurfaceSignature(H, lam, boundary_positions, colors)


def transfer_attributes(
    reg: RegistrationMap, colors_b: VertexField, pb: DiskParameterization, images: FloatArray | None = None
) -> VertexField:
    """Per-vertex colours of ``pb`` resampled on the unified mesh, clamped to [0, 1]."""
    values = sample_field(pb, colors_b, _images(reg, images), operation="transfer_attributes")
    return np.clip(values, 0.0, 1.0)


def transfer_positions(
    reg: RegistrationMap, positions_b: FloatArray, pb: DiskParameterization, images: FloatArray | None = None
) -> FloatArray:
    """3D positions of ``pb``'s surface resampled on the unified mesh."""
    return sample_field(pb, positions_b, _images(reg, images), operation="transfer_positions")
