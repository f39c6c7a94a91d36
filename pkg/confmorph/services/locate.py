"""
Point location in planar triangulations.

Faces are bucketed into a uniform grid over their (slightly expanded) bounding
boxes. A query tests the faces of its cell; when several contain the point the
lowest face index wins. Points within ``SNAP`` of a triangle are snapped onto
it. With ``clamp=True``, points in the thin slivers between a boundary chord
with both ends on the unit circle and the circle itself are projected onto that
chord; any other uncovered point is still an error.
"""

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from confmorph.misc.exceptions import PointLocationError
from confmorph.models.mesh import FloatArray, IntArray
from confmorph.models.signature import BarycentricLocation

SNAP = 1e-6
INSIDE = 1e-12
DISK_SLACK = 1e-6


def _cross(ax: FloatArray, ay: FloatArray, bx: FloatArray, by: FloatArray) -> FloatArray:
    return ax * by - ay * bx


def barycentric(point: FloatArray, a: FloatArray, b: FloatArray, c: FloatArray) -> FloatArray:
    """
    Normalized barycentric coordinates of ``point`` in triangles (a, b, c).

    ``a``, ``b``, ``c`` are (K, 2) arrays; returns (K, 3). Each coordinate is the
    signed area of the sub-triangle opposite its vertex over the total.
    """
    px, py = point[0], point[1]
    l1 = _cross(b[:, 0] - px, b[:, 1] - py, c[:, 0] - px, c[:, 1] - py)
    l2 = _cross(c[:, 0] - px, c[:, 1] - py, a[:, 0] - px, a[:, 1] - py)
    l3 = _cross(a[:, 0] - px, a[:, 1] - py, b[:, 0] - px, b[:, 1] - py)
    total = l1 + l2 + l3
    return np.column_stack((l1, l2, l3)) / total[:, np.newaxis]


def _closest_on_segment(p: FloatArray, a: FloatArray, b: FloatArray) -> FloatArray:
    ab = b - a
    length2 = np.sum(ab * ab, axis=1)
    s = np.clip(np.sum((p - a) * ab, axis=1) / np.where(length2 > 0, length2, 1.0), 0.0, 1.0)
    return a + s[:, np.newaxis] * ab


@dataclass(frozen=True)
class _Nearest:
    face: int
    distance: float
    point: FloatArray


class TriangleLocator:
    """Uniform-grid index over a planar triangulation."""

    def __init__(self, vertices: npt.ArrayLike, faces: npt.ArrayLike, cells: int | None = None) -> None:
        self.vertices = np.asarray(vertices, dtype=np.float64)[:, :2]
        self.faces = np.asarray(faces, dtype=np.int64)
        tri = self.vertices[self.faces]
        self._a, self._b, self._c = tri[:, 0], tri[:, 1], tri[:, 2]
        lo = tri.min(axis=1) - SNAP
        hi = tri.max(axis=1) + SNAP
        self.origin = lo.min(axis=0)
        extent = np.maximum(hi.max(axis=0) - self.origin, 1e-12)
        self.cells = cells or max(1, int(np.ceil(np.sqrt(len(self.faces)))))
        self.cell_size = extent / self.cells

        i0, j0 = self._cell(lo).T
        i1, j1 = self._cell(hi).T
        pairs: list[tuple[int, int]] = []
        for face in range(len(self.faces)):
            for i in range(i0[face], i1[face] + 1):
                for j in range(j0[face], j1[face] + 1):
                    pairs.append((i * self.cells + j, face))
        table = np.array(sorted(pairs), dtype=np.int64)
        self._bucket_faces = table[:, 1]
        self._bucket_start = np.searchsorted(table[:, 0], np.arange(self.cells * self.cells + 1))
        self._rim = self._rim_chords()

    def _rim_chords(self) -> IntArray:
        """Boundary edges with both ends on the unit circle, as rows (face, head, tail, apex)."""
        heads = self.faces.ravel()
        tails = self.faces[:, [1, 2, 0]].ravel()
        apexes = self.faces[:, [2, 0, 1]].ravel()
        owners = np.repeat(np.arange(len(self.faces)), 3)
        directed = set(zip(heads.tolist(), tails.tolist(), strict=True))
        outer = np.array([(t, h) not in directed for h, t in zip(heads.tolist(), tails.tolist(), strict=True)])
        radius = np.linalg.norm(self.vertices, axis=1)
        on_circle = np.abs(radius - 1.0) <= DISK_SLACK
        rim = outer & on_circle[heads] & on_circle[tails]
        return np.column_stack((owners[rim], heads[rim], tails[rim], apexes[rim]))

    def _cell(self, points: FloatArray) -> IntArray:
        return np.clip(((points - self.origin) / self.cell_size).astype(np.int64), 0, self.cells - 1)

    def _candidates(self, point: FloatArray) -> IntArray:
        offset = point - self.origin
        if np.any(offset < -SNAP) or np.any(offset > self.cell_size * self.cells + SNAP):
            return np.empty(0, dtype=np.int64)
        i, j = self._cell(point[np.newaxis, :])[0]
        key = i * self.cells + j
        return self._bucket_faces[self._bucket_start[key] : self._bucket_start[key + 1]]

    def _nearest(self, point: FloatArray, faces: IntArray) -> _Nearest:
        a, b, c = self._a[faces], self._b[faces], self._c[faces]
        p = np.broadcast_to(point, a.shape)
        closest = np.stack([_closest_on_segment(p, u, v) for u, v in ((a, b), (b, c), (c, a))])
        distance = np.linalg.norm(closest - p, axis=2)
        edge = np.argmin(distance, axis=0)
        per_face = distance[edge, np.arange(len(faces))]
        k = int(np.argmin(per_face))
        return _Nearest(int(faces[k]), float(per_face[k]), closest[edge[k], k])

    def locate(self, point: npt.ArrayLike, clamp: bool = False, operation: str = "locate") -> BarycentricLocation:
        """
        Containing face and normalized barycentric coordinates of ``point``.

        Raises:
            PointLocationError: If the point is farther than the snap tolerance
                from every triangle (and, with ``clamp``, in no rim sliver)
        """
        point = np.asarray(point, dtype=np.float64)
        candidates = self._candidates(point)
        if len(candidates):
            coords = barycentric(point, self._a[candidates], self._b[candidates], self._c[candidates])
            inside = np.flatnonzero(coords.min(axis=1) >= -INSIDE)
            if len(inside):
                k = inside[np.argmin(candidates[inside])]
                return BarycentricLocation(int(candidates[k]), _clip(coords[k]))
            nearest = self._nearest(point, candidates)
            if nearest.distance <= SNAP:
                return self._snapped(nearest)
        if clamp:
            sliver = self._sliver(point)
            if sliver is not None:
                return self._snapped(sliver)
        distance = self._nearest(point, np.arange(len(self.faces))).distance
        raise PointLocationError((float(point[0]), float(point[1])), distance, operation)

    def _sliver(self, point: FloatArray) -> _Nearest | None:
        """Closest point on the rim chord cutting off the circular segment that holds ``point``."""
        if len(self._rim) == 0 or np.linalg.norm(point) > 1.0 + DISK_SLACK:
            return None
        face, head, tail, apex = self._rim.T
        a, b, c = self.vertices[head], self.vertices[tail], self.vertices[apex]
        ab = b - a
        side = _cross(ab[:, 0], ab[:, 1], point[0] - a[:, 0], point[1] - a[:, 1])
        inner = _cross(ab[:, 0], ab[:, 1], c[:, 0] - a[:, 0], c[:, 1] - a[:, 1])
        beyond = np.flatnonzero(side * inner < 0.0)
        if len(beyond) == 0:
            return None
        p = np.broadcast_to(point, (len(beyond), 2))
        closest = _closest_on_segment(p, a[beyond], b[beyond])
        distance = np.linalg.norm(closest - p, axis=1)
        k = int(np.argmin(distance))
        return _Nearest(int(face[beyond[k]]), float(distance[k]), closest[k])

    def _snapped(self, nearest: _Nearest) -> BarycentricLocation:
        f = nearest.face
        coords = barycentric(nearest.point, self._a[[f]], self._b[[f]], self._c[[f]])[0]
        return BarycentricLocation(f, _clip(coords))

    def locate_many(
        self, points: npt.ArrayLike, clamp: bool = False, operation: str = "locate"
    ) -> tuple[IntArray, FloatArray]:
        """Vectorized :meth:`locate`; returns face indices (N,) and coordinates (N, 3)."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        faces = np.empty(len(points), dtype=np.int64)
        coords = np.empty((len(points), 3))
        for n, point in enumerate(points):
            loc = self.locate(point, clamp, operation)
            faces[n] = loc.face
            coords[n] = loc.coords
        return faces, coords

    def interpolate(
        self, values: npt.ArrayLike, points: npt.ArrayLike, clamp: bool = False, operation: str = "locate"
    ) -> FloatArray:
        """Barycentric interpolation of per-vertex ``values`` at ``points``."""
        values = np.asarray(values, dtype=np.float64)
        faces, coords = self.locate_many(points, clamp, operation)
        corners = values[self.faces[faces]]
        if values.ndim == 1:
            return np.sum(corners * coords, axis=1)
        return np.einsum("nk,nkc->nc", coords, corners)

    def contains(self, point: npt.ArrayLike) -> bool:
        try:
            self.locate(point)
        except PointLocationError:
            return False
        return True


def _clip(coords: FloatArray) -> FloatArray:
    coords = np.clip(coords, 0.0, None)
    return coords / coords.sum()


def locate(x: npt.ArrayLike, vertices: npt.ArrayLike, faces: npt.ArrayLike) -> BarycentricLocation:
    """One-off location of ``x`` in the triangulation (``vertices``, ``faces``)."""
    return TriangleLocator(vertices, faces).locate(x)
