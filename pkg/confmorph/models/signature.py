"""Surface signatures and the piecewise-linear registration map."""

from collections.abc import Callable
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from confmorph.misc.exceptions import FieldLengthError, VanishingConformalFactorError
from confmorph.models.mesh import FloatArray, IntArray, VertexField

if TYPE_CHECKING:
    from confmorph.services.locate import TriangleLocator

BOUNDARY_RADIUS = 1.0 - 1e-9


@dataclass(frozen=True)
class BarycentricLocation:
    face: int
    coords: FloatArray

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.shape != (3,) or coords.min() < 0.0 or abs(coords.sum() - 1.0) > 1e-10:
            raise ValueError(f"invalid barycentric coordinates {coords}")
        object.__setattr__(self, "coords", coords)


@dataclass(frozen=True, eq=False)
class SurfaceSignature:
    """Per-vertex mean curvature and conformal factor, plus the boundary curve."""

    H: VertexField
    lam: VertexField
    boundary_positions: FloatArray
    colors: FloatArray | None = None

    def __post_init__(self) -> None:
        if len(self.H) != len(self.lam):
            raise FieldLengthError([len(self.H), len(self.lam)], operation="surface_signature")
        bad = np.flatnonzero(~(np.asarray(self.lam) > 0.0))
        if len(bad):
            raise VanishingConformalFactorError(int(bad[0]), "surface_signature")

    @property
    def n_vertices(self) -> int:
        return len(self.H)


@dataclass(frozen=True)
class BoundaryCorrespondence:
    """
    Map from the source unit circle to the target unit circle.

    With anchors, angles between consecutive anchors are interpolated linearly
    (periodically). Without anchors ``fallback`` maps the points and the result
    is projected radially onto the circle.
    """

    source_angles: FloatArray | None = None
    target_angles: FloatArray | None = None
    fallback: Callable[[FloatArray], FloatArray] | None = field(default=None, repr=False)

    def __call__(self, points: FloatArray) -> FloatArray:
        points = np.atleast_2d(points)
        if self.source_angles is None or self.target_angles is None:
            mapped = points if self.fallback is None else self.fallback(points)
            return mapped / np.linalg.norm(mapped, axis=1)[:, np.newaxis]
        theta = np.mod(np.arctan2(points[:, 1], points[:, 0]), 2.0 * np.pi)
        xs = np.concatenate((self.source_angles - 2 * np.pi, self.source_angles, self.source_angles + 2 * np.pi))
        ys = np.concatenate((self.target_angles - 2 * np.pi, self.target_angles, self.target_angles + 2 * np.pi))
        mapped = np.interp(theta, xs, ys)
        return np.column_stack((np.cos(mapped), np.sin(mapped)))


@dataclass(frozen=True, eq=False)
class RegistrationMap:
    """
    Piecewise-affine map between disk images of two surfaces.

    ``targets[k]`` is the matched image of partition vertex ``k``. Points of
    the unit circle are mapped by the boundary correspondence; other points by
    the affine map of the partition triangle containing them.
    ``source_faces``/``source_coords``/``images`` cache the location and image
    of every vertex of the mesh the map was built for, ``source_boundary``
    its boundary loop.
    """

    partition_vertices: FloatArray
    partition_faces: IntArray
    targets: FloatArray
    boundary: BoundaryCorrespondence
    locator: "TriangleLocator" = field(repr=False)
    source_faces: IntArray = field(default_factory=lambda: np.empty(0, dtype=np.int64), repr=False)
    source_coords: FloatArray = field(default_factory=lambda: np.empty((0, 3)), repr=False)
    images: FloatArray = field(default_factory=lambda: np.empty((0, 2)), repr=False)
    source_boundary: IntArray = field(default_factory=lambda: np.empty(0, dtype=np.int64), repr=False)

    def __call__(self, points: FloatArray) -> FloatArray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        out = np.empty_like(points)
        on_circle = np.linalg.norm(points, axis=1) >= BOUNDARY_RADIUS
        if on_circle.any():
            out[on_circle] = self.boundary(points[on_circle])
        inner = ~on_circle
        if inner.any():
            faces, coords = self.locator.locate_many(points[inner], clamp=True, operation="registration_map")
            out[inner] = np.einsum("nk,nkc->nc", coords, self.targets[self.partition_faces[faces]])
        return out

    def then(self, outer: "RegistrationMap") -> Callable[[FloatArray], FloatArray]:
        """The composite ``outer ∘ self`` as a function of disk points."""
        return lambda points: outer(self(points))
