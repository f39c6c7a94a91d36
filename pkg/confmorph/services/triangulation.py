"""
Constrained Delaunay triangulation of planar point sets.

The unconstrained triangulation comes from ``scipy.spatial.Delaunay``.
Constraint segments missing from it are recovered by flipping the edges they
cross (Sloan's queue method), then every unconstrained edge is flipped until
it is locally Delaunay again.
"""

from collections import deque
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt
from scipy.spatial import Delaunay

from confmorph.misc.exceptions import GeodesicError
from confmorph.misc.logger import logger
from confmorph.models.mesh import FloatArray, IntArray

Edge = tuple[int, int]


def _orient(p: FloatArray, q: FloatArray, r: FloatArray) -> float:
    return float((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))


def _incircle(a: FloatArray, b: FloatArray, c: FloatArray, d: FloatArray) -> float:
    """Positive when ``d`` lies inside the circumcircle of the CCW triangle (a, b, c)."""
    rows = np.array([a - d, b - d, c - d])
    lifted = np.column_stack((rows, np.sum(rows * rows, axis=1)))
    return float(np.linalg.det(lifted))


class _Triangulation:
    def __init__(self, points: FloatArray, triangles: IntArray) -> None:
        self.points = points
        scale = float(np.ptp(points, axis=0).max()) if len(points) else 1.0
        self.eps = 1e-13 * scale * scale
        self.circle_eps = 1e-12 * scale**4
        self.tris: list[list[int]] = []
        self.half: dict[Edge, int] = {}
        for tri in triangles:
            a, b, c = (int(v) for v in tri)
            if _orient(points[a], points[b], points[c]) < 0:
                b, c = c, b
            self.tris.append([a, b, c])
            self._register(len(self.tris) - 1)

    def _register(self, k: int) -> None:
        a, b, c = self.tris[k]
        for edge in ((a, b), (b, c), (c, a)):
            self.half[edge] = k

    def _unregister(self, k: int) -> None:
        a, b, c = self.tris[k]
        for edge in ((a, b), (b, c), (c, a)):
            del self.half[edge]

    def has_edge(self, a: int, b: int) -> bool:
        return (a, b) in self.half or (b, a) in self.half

    def interior_edges(self) -> list[Edge]:
        return [(a, b) for (a, b) in self.half if a < b and (b, a) in self.half]

    def _opposite(self, a: int, b: int) -> tuple[int, int]:
        """Apexes c of the triangle over a -> b and d of the triangle over b -> a."""
        t1, t2 = self.tris[self.half[(a, b)]], self.tris[self.half[(b, a)]]
        c = next(v for v in t1 if v not in (a, b))
        d = next(v for v in t2 if v not in (a, b))
        return c, d

    def crosses(self, u: int, w: int, a: int, b: int) -> bool:
        if len({u, w, a, b}) < 4:
            return False
        p = self.points
        o1, o2 = _orient(p[u], p[w], p[a]), _orient(p[u], p[w], p[b])
        o3, o4 = _orient(p[a], p[b], p[u]), _orient(p[a], p[b], p[w])
        e = self.eps
        return ((o1 > e and o2 < -e) or (o1 < -e and o2 > e)) and ((o3 > e and o4 < -e) or (o3 < -e and o4 > e))

    def convex(self, a: int, b: int) -> bool:
        c, d = self._opposite(a, b)
        p = self.points
        o1, o2 = _orient(p[c], p[d], p[a]), _orient(p[c], p[d], p[b])
        return (o1 > self.eps and o2 < -self.eps) or (o1 < -self.eps and o2 > self.eps)

    def flip(self, a: int, b: int) -> Edge:
        c, d = self._opposite(a, b)
        t1, t2 = self.half[(a, b)], self.half[(b, a)]
        self._unregister(t1)
        self._unregister(t2)
        self.tris[t1] = [a, d, c]
        self.tris[t2] = [d, b, c]
        self._register(t1)
        self._register(t2)
        return (c, d)

    def locally_delaunay(self, a: int, b: int) -> bool:
        c, d = self._opposite(a, b)
        p = self.points
        return _incircle(p[a], p[b], p[c], p[d]) <= self.circle_eps

    def collinear_between(self, u: int, w: int) -> int | None:
        """A vertex strictly inside segment u-w, closest to u, if any."""
        p = self.points
        d = p[w] - p[u]
        length2 = float(d @ d)
        rel = p - p[u]
        along = rel @ d / length2
        off = np.abs(rel[:, 0] * d[1] - rel[:, 1] * d[0])
        hit = (off <= self.eps) & (along > 1e-12) & (along < 1.0 - 1e-12)
        hit[[u, w]] = False
        idx = np.flatnonzero(hit)
        return None if len(idx) == 0 else int(idx[np.argmin(along[idx])])

    def recover(self, u: int, w: int) -> list[Edge]:
        """Force u-w into the triangulation; returns the edges created on the way."""
        if self.has_edge(u, w):
            return []
        queue = deque(e for e in self.interior_edges() if self.crosses(u, w, *e))
        created: list[Edge] = []
        budget = 50 * (len(queue) + 10) ** 2
        while queue:
            budget -= 1
            if budget < 0:
                raise GeodesicError(
                    f"cannot recover constraint {u}-{w}", "CONSTRAINT_RECOVERY", {"edge": [u, w]}, operation="build_frame"
                )
            a, b = queue.popleft()
            if not self.convex(a, b):
                queue.append((a, b))
                continue
            c, d = self.flip(a, b)
            if self.crosses(u, w, c, d):
                queue.append((c, d))
            else:
                created.append((c, d))
        return created

    def restore_delaunay(self, fixed: set[Edge]) -> int:
        flips = 0
        for _ in range(100):
            changed = False
            for a, b in self.interior_edges():
                if (a, b) in fixed or not self.has_edge(a, b):
                    continue
                if not self.locally_delaunay(a, b) and self.convex(a, b):
                    self.flip(a, b)
                    flips += 1
                    changed = True
            if not changed:
                break
        return flips


def constrained_triangulation(
    points: npt.ArrayLike, chains: Sequence[Sequence[int]]
) -> tuple[IntArray, list[IntArray]]:
    """
    Triangulate ``points`` so that every chain of vertex indices is traced by edges.

    A constraint segment passing exactly through another vertex is split
    there, so the returned chains may contain extra vertices.

    Returns:
        CCW triangles (F, 3) and the refined chains
    """
    points = np.asarray(points, dtype=np.float64)[:, :2]
    tri = _Triangulation(points, Delaunay(points).simplices)

    refined: list[IntArray] = []
    fixed: set[Edge] = set()
    for chain in chains:
        out = [int(chain[0])]
        for target in (int(v) for v in chain[1:]):
            if target == out[-1]:
                continue
            while True:
                u = out[-1]
                stop = tri.collinear_between(u, target)
                w = target if stop is None else stop
                tri.recover(u, w)
                fixed.add((min(u, w), max(u, w)))
                out.append(w)
                if w == target:
                    break
        refined.append(np.array(out, dtype=np.int64))

    flips = tri.restore_delaunay(fixed)
    faces = np.array(tri.tris, dtype=np.int64)
    logger.debug("Constrained triangulation: %d triangles, %d constraints, %d Delaunay flips", len(faces), len(fixed), flips)
    return faces, refined
