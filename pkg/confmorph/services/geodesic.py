"""
Feature paths and the geodesic frame.

A frame edge starts as the straight disk segment between two feature images,
pulled back to the surface through the parametric triangulation. The face
strip it crosses is then unfolded into the plane edge by edge, and the path
is replaced by the shortest polyline inside the unfolded strip (funnel
algorithm). Wherever that polyline wraps around an interior vertex whose
angle on the far side is below pi, the strip is re-routed around the other
side of the vertex and the strip is unfolded again.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from confmorph.config import GeodesicSettings
from confmorph.misc.exceptions import CoincidentFeaturesError, PathCrossingError, SegmentExitError
from confmorph.misc.logger import logger
from confmorph.models.frame import GeodesicFrame, SurfacePath
from confmorph.models.mesh import FloatArray, IntArray, TriangleMesh
from confmorph.models.parameterization import DiskParameterization
from confmorph.services.conformal import corner_angles
from confmorph.services.triangulation import constrained_triangulation

# Point on the edge a-b: (1 - t) * a + t * b. A vertex is (v, v, 0).
Crossing = tuple[int, int, float]

VERTEX_SNAP = 1e-9
ANGLE_TOL = 1e-6
MERGE_RADIUS = 1e-9


def _cross2(u: FloatArray, v: FloatArray) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def _rotated(face: Sequence[int], v: int) -> tuple[int, int, int]:
    """The face's vertices in CCW order starting at ``v``."""
    a, b, c = (int(x) for x in face)
    if v == a:
        return a, b, c
    if v == b:
        return b, c, a
    return c, a, b


class _Topology:
    """Half-edge lookup and vertex stars of a mesh."""

    def __init__(self, mesh: TriangleMesh) -> None:
        self.mesh = mesh
        self.faces = mesh.faces
        t = mesh.faces
        heads = t.reshape(-1).tolist()
        tails = t[:, [1, 2, 0]].reshape(-1).tolist()
        owners = np.repeat(np.arange(len(t)), 3).tolist()
        self.half = dict(zip(zip(heads, tails, strict=True), owners, strict=True))
        star = mesh.vertex_faces.tocsr()
        self._star_ptr, self._star_idx = star.indptr, star.indices

    def star(self, v: int) -> IntArray:
        return np.sort(self._star_idx[self._star_ptr[v] : self._star_ptr[v + 1]])

    def fans(self, v: int, start: int, stop: int) -> list[list[int]]:
        """
        Face sequences turning around ``v`` from ``start`` to ``stop``, one per direction.

        Each sequence excludes ``start`` and ends with ``stop``; a direction
        that runs into the boundary is dropped.
        """
        out: list[list[int]] = []
        limit = len(self.star(v)) + 1
        for forward in (True, False):
            seq: list[int] = []
            face = start
            for _ in range(limit):
                _, p, q = _rotated(self.faces[face], v)
                face = self.half.get((p, v), -1) if forward else self.half.get((v, q), -1)
                if face < 0:
                    break
                seq.append(face)
                if face == stop:
                    out.append(seq)
                    break
        return out


def _sector_face(topo: _Topology, z: FloatArray, v: int, d: FloatArray) -> int:
    """The face around ``v`` whose corner at ``v`` contains the direction ``d``."""
    scale = float(np.linalg.norm(d))
    for face in topo.star(v):
        _, p, q = _rotated(topo.faces[face], v)
        ep, eq = z[p] - z[v], z[q] - z[v]
        tol = 1e-12 * scale * max(float(np.linalg.norm(ep)), float(np.linalg.norm(eq)))
        if _cross2(ep, d) >= -tol and _cross2(d, eq) >= -tol and _cross2(ep, eq) > 0.0:
            return int(face)
    return -1


def _edge_parameter(z: FloatArray, origin: FloatArray, d: FloatArray, x: int, y: int) -> float:
    """Where the line origin + s d meets the edge x -> y, as a fraction along the edge."""
    denominator = _cross2(z[y] - z[x], d)
    if denominator == 0.0:
        return 0.0
    return min(1.0, max(0.0, _cross2(origin - z[x], d) / denominator))


def _walk(topo: _Topology, z: FloatArray, s: int, e: int) -> tuple[list[int], list[Crossing]]:
    """Faces crossed by the disk segment from ``s`` to ``e`` and the crossing of every shared edge."""
    origin = z[s]
    d = z[e] - origin
    if float(np.linalg.norm(d)) < 1e-12:
        raise CoincidentFeaturesError(s, e)

    strip: list[int] = []
    crossings: list[Crossing] = []
    vertex: int | None = s
    entered: tuple[int, int] = (-1, -1)
    for _ in range(4 * len(topo.faces) + 16):
        if vertex is not None:
            face = _sector_face(topo, z, vertex, d)
            if face < 0:
                raise SegmentExitError(s, e, strip[-1] if strip else -1)
            if not strip:
                strip.append(face)
            elif face != strip[-1]:
                fans = topo.fans(vertex, strip[-1], face)
                if not fans:
                    raise SegmentExitError(s, e, strip[-1])
                for fan_face in min(fans, key=len):
                    strip.append(fan_face)
                    crossings.append((vertex, vertex, 0.0))
            if e in topo.faces[face]:
                return strip, crossings
            _, x, y = _rotated(topo.faces[face], vertex)
        else:
            face = strip[-1]
            a, b = entered
            c = next(int(v) for v in topo.faces[face] if v not in (a, b))
            if c == e:
                return strip, crossings
            side_c = _cross2(d, z[c] - origin)
            side_a = _cross2(d, z[a] - origin)
            if abs(side_c) <= 1e-12 * float(np.linalg.norm(d)) * float(np.linalg.norm(z[c] - origin)):
                vertex = c
                continue
            # the face holds the half-edges b -> a, a -> c and c -> b
            x, y = (c, b) if (side_c > 0) == (side_a > 0) else (a, c)
        t = _edge_parameter(z, origin, d, x, y)
        if t <= VERTEX_SNAP or t >= 1.0 - VERTEX_SNAP:
            vertex = x if t <= VERTEX_SNAP else y
            if vertex == e:
                return strip, crossings
            continue
        nxt = topo.half.get((y, x), -1)
        if nxt < 0:
            raise SegmentExitError(s, e, face)
        strip.append(nxt)
        crossings.append((x, y, t))
        entered = (x, y)
        vertex = None
    raise SegmentExitError(s, e, strip[-1] if strip else -1)


def _bary(face: Sequence[int], crossing: Crossing) -> FloatArray:
    a, b, t = crossing
    out = np.zeros(3)
    corners = [int(v) for v in face]
    out[corners.index(a)] += 1.0 - t
    out[corners.index(b)] += t
    return out


def _assemble(
    mesh: TriangleMesh,
    s: int,
    e: int,
    strip: Sequence[int],
    crossings: Sequence[Crossing],
    iterations: int = 0,
    converged: bool = True,
    boundary_contact: bool = False,
) -> SurfacePath:
    faces = np.array([strip[0], *strip[1:], strip[-1]], dtype=np.int64)
    points = [(s, s, 0.0), *crossings, (e, e, 0.0)]
    bary = np.array([_bary(mesh.faces[f], c) for f, c in zip(faces, points, strict=True)])
    strip_array = np.asarray(strip, dtype=np.int64)
    xyz = np.einsum("nk,nkc->nc", bary, mesh.positions[mesh.faces[faces]])
    length = float(np.linalg.norm(np.diff(xyz, axis=0), axis=1).sum())
    return SurfacePath(s, e, strip_array, faces, bary, length, iterations, converged, boundary_contact)


def initial_paths(pairs: Sequence[tuple[int, int]], param: DiskParameterization) -> list[SurfacePath]:
    """
    Pull straight disk segments between paired feature vertices back to the surface.

    Raises:
        CoincidentFeaturesError: If two paired features share a disk image
        SegmentExitError: If a segment leaves the parametric triangulation
    """
    topo = _Topology(param.mesh)
    paths = []
    for s, e in pairs:
        strip, crossings = _walk(topo, param.image, int(s), int(e))
        paths.append(_assemble(param.mesh, int(s), int(e), strip, crossings))
    return paths


# --- path correction ----------------------------------------------------------


def _third_point(a: FloatArray, b: FloatArray, ra: float, rb: float) -> FloatArray:
    """Point at distances ``ra`` from ``a`` and ``rb`` from ``b``, left of a -> b."""
    d = float(np.linalg.norm(b - a))
    x = (ra * ra - rb * rb + d * d) / (2.0 * d)
    y = math.sqrt(max(ra * ra - x * x, 0.0))
    ex = (b - a) / d
    return a + x * ex + y * np.array([-ex[1], ex[0]])


@dataclass
class _Strip:
    """A face strip unfolded into the plane, with its portals (shared edges)."""

    faces: list[int]
    left: FloatArray
    right: FloatArray
    left_id: IntArray
    right_id: IntArray


def _unfold(mesh: TriangleMesh, strip: Sequence[int], s: int, e: int) -> _Strip:
    """Lay the strip flat; portal k sits between strip[k - 1] and strip[k], 0 and the last are the endpoints."""
    x = mesh.positions
    first = [int(v) for v in mesh.faces[strip[0]]]
    u0, u1, u2 = first
    origin = np.zeros(2)
    placed = {u0: origin, u1: np.array([float(np.linalg.norm(x[u1] - x[u0])), 0.0])}
    placed[u2] = _third_point(placed[u0], placed[u1], float(np.linalg.norm(x[u2] - x[u0])), float(np.linalg.norm(x[u2] - x[u1])))
    frames = [placed]

    count = len(strip) + 1
    left = np.empty((count, 2))
    right = np.empty((count, 2))
    left_id = np.empty(count, dtype=np.int64)
    right_id = np.empty(count, dtype=np.int64)
    left[0] = right[0] = placed[s]
    left_id[0] = right_id[0] = s

    for k in range(1, len(strip)):
        face = [int(v) for v in mesh.faces[strip[k - 1]]]
        nxt = {int(v) for v in mesh.faces[strip[k]]}
        a, b = next((face[i], face[(i + 1) % 3]) for i in range(3) if {face[i], face[(i + 1) % 3]} <= nxt)
        c = next(iter(nxt - {a, b}))
        prev = frames[-1]
        current = {a: prev[a], b: prev[b]}
        # the next face holds b -> a, so its apex goes left of b -> a
        current[c] = _third_point(prev[b], prev[a], float(np.linalg.norm(x[c] - x[b])), float(np.linalg.norm(x[c] - x[a])))
        frames.append(current)
        left[k], right[k] = prev[b], prev[a]
        left_id[k], right_id[k] = b, a

    left[-1] = right[-1] = frames[-1][e]
    left_id[-1] = right_id[-1] = e
    return _Strip(list(strip), left, right, left_id, right_id)


def _orient(p: FloatArray, q: FloatArray, r: FloatArray) -> float:
    return float((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))


def _push(corners: list[tuple[int, int]], vertex: int, index: int) -> None:
    if corners[-1] != (vertex, index):
        corners.append((vertex, index))


def _funnel(unfolded: _Strip) -> list[tuple[int, int]]:
    """Corners of the shortest polyline through the portals, as (vertex, portal index)."""
    L, R = unfolded.left, unfolded.right
    n = len(L)
    apex, left_pt, right_pt = L[0], L[0], R[0]
    apex_i = left_i = right_i = 0
    corners = [(int(unfolded.left_id[0]), 0)]
    i = 1
    while i < n:
        if _orient(apex, right_pt, R[i]) >= 0.0:
            if np.array_equal(apex, right_pt) or _orient(apex, left_pt, R[i]) < 0.0:
                right_pt, right_i = R[i], i
            else:
                apex, apex_i = left_pt, left_i
                _push(corners, int(unfolded.left_id[apex_i]), apex_i)
                left_pt = right_pt = apex
                left_i = right_i = apex_i
                i = apex_i + 1
                continue
        if _orient(apex, left_pt, L[i]) <= 0.0:
            if np.array_equal(apex, left_pt) or _orient(apex, right_pt, L[i]) > 0.0:
                left_pt, left_i = L[i], i
            else:
                apex, apex_i = right_pt, right_i
                _push(corners, int(unfolded.right_id[apex_i]), apex_i)
                left_pt = right_pt = apex
                left_i = right_i = apex_i
                i = apex_i + 1
                continue
        i += 1
    corners.append((int(unfolded.left_id[-1]), n - 1))
    return corners


def _corner_point(unfolded: _Strip, vertex: int, index: int) -> FloatArray:
    return unfolded.left[index] if unfolded.left_id[index] == vertex else unfolded.right[index]


def _portal_crossings(unfolded: _Strip, corners: list[tuple[int, int]]) -> list[Crossing]:
    """Crossing of every inner portal by the polyline through ``corners``."""
    out: list[Crossing] = []
    segment = 0
    for i in range(1, len(unfolded.left) - 1):
        while segment + 2 < len(corners) and corners[segment + 1][1] <= i:
            segment += 1
        a_id, b_id = int(unfolded.right_id[i]), int(unfolded.left_id[i])
        touching = next((v for v, _ in (corners[segment], corners[segment + 1]) if v in (a_id, b_id)), None)
        if touching is not None:
            out.append((touching, touching, 0.0))
            continue
        p = _corner_point(unfolded, *corners[segment])
        q = _corner_point(unfolded, *corners[segment + 1])
        r, l = unfolded.right[i], unfolded.left[i]
        direction = q - p
        denominator = _cross2(l - r, direction)
        t = 0.0 if denominator == 0.0 else _cross2(p - r, direction) / denominator
        out.append((a_id, b_id, min(1.0, max(0.0, t))))
    return out


@dataclass
class _Straightened:
    strip: list[int]
    crossings: list[Crossing]
    corners: list[tuple[int, int]]
    path: SurfacePath


def _straighten(mesh: TriangleMesh, strip: Sequence[int], s: int, e: int) -> _Straightened:
    unfolded = _unfold(mesh, strip, s, e)
    corners = _funnel(unfolded)
    crossings = _portal_crossings(unfolded, corners)
    return _Straightened(list(strip), crossings, corners, _assemble(mesh, s, e, strip, crossings))


def _point(mesh: TriangleMesh, crossing: Crossing) -> FloatArray:
    a, b, t = crossing
    return (1.0 - t) * mesh.positions[a] + t * mesh.positions[b]


def _angle(u: FloatArray, v: FloatArray) -> float:
    return math.atan2(float(np.linalg.norm(np.cross(u, v))), float(u @ v))


def _reroutes(
    mesh: TriangleMesh, topo: _Topology, total_angle: FloatArray, state: _Straightened, s: int, e: int
) -> tuple[list[int], bool]:
    """
    Re-route the strip around every corner vertex whose far-side angle is below pi.

    Returns the new strip (unchanged if the path is locally geodesic) and
    whether a corner sits on the mesh boundary.
    """
    strip = list(state.strip)
    points = [(s, s, 0.0), *state.crossings, (e, e, 0.0)]
    portal_ends = [{s}] + [{int(v) for v in mesh.faces[strip[k - 1]]} & {int(v) for v in mesh.faces[strip[k]]} for k in range(1, len(strip))] + [{e}]
    boundary_contact = False
    taken_until = len(points)
    for vertex, index in reversed(state.corners[1:-1]):
        if mesh.boundary_mask[vertex]:
            boundary_contact = True
            continue
        i0 = i1 = index
        while i0 - 1 >= 1 and vertex in portal_ends[i0 - 1]:
            i0 -= 1
        while i1 + 1 < len(portal_ends) - 1 and vertex in portal_ends[i1 + 1]:
            i1 += 1
        if i1 + 1 >= taken_until:
            continue
        v = mesh.positions[vertex]
        first_edge = next(iter(portal_ends[i0] - {vertex}))
        last_edge = next(iter(portal_ends[i1] - {vertex}))
        inside = _angle(_point(mesh, points[i0 - 1]) - v, mesh.positions[first_edge] - v)
        inside += _angle(mesh.positions[last_edge] - v, _point(mesh, points[i1 + 1]) - v)
        for k in range(i0, i1):
            corners = [int(c) for c in mesh.faces[strip[k]]]
            _, p, q = _rotated(corners, vertex)
            inside += _angle(mesh.positions[p] - v, mesh.positions[q] - v)
        if total_angle[vertex] - inside >= math.pi - ANGLE_TOL:
            continue
        strip_side = strip[i0] if i1 > i0 else None
        fans = [fan for fan in topo.fans(vertex, strip[i0 - 1], strip[i1]) if strip_side is None or fan[0] != strip_side]
        if strip_side is None:
            fans = [fan for fan in fans if len(fan) > 1]
        if not fans:
            continue
        strip = strip[:i0] + fans[0] + strip[i1 + 1 :]
        taken_until = i0
    return strip, boundary_contact


def _relax(
    mesh: TriangleMesh, topo: _Topology, total_angle: FloatArray, state: _Straightened, s: int, e: int
) -> tuple[_Straightened, int, bool]:
    """
    One correcting iteration: re-route and re-funnel the whole strip until no corner needs re-routing.

    Returns the shortest state reached, the number of re-routing sweeps that
    changed the strip and whether the last corners checked touch the boundary.
    """
    sweeps, contact = 0, False
    for _ in range(len(mesh.faces)):
        strip, contact = _reroutes(mesh, topo, total_angle, state, s, e)
        if strip == state.strip:
            break
        candidate = _straighten(mesh, strip, s, e)
        if candidate.path.length >= state.path.length:
            break
        state = candidate
        sweeps += 1
    return state, sweeps, contact


def correct_path(mesh: TriangleMesh, path: SurfacePath, max_iter: int = 30, tol: float = 1e-6) -> SurfacePath:
    """
    Straighten ``path`` by unfolding its face strip and re-routing around vertices.

    Each correcting iteration re-routes the strip around every offending
    vertex, re-funnels it and repeats until the strip is stable, so a path
    usually settles in one iteration and the next one confirms it. Stops when
    no vertex needs re-routing or when the relative length decrease falls below
    ``tol``. The returned length never exceeds the input length; ``converged``
    is False when ``max_iter`` was hit.
    """
    s, e = path.start, path.end
    topo = _Topology(mesh)
    angles = corner_angles(mesh, mesh.positions)
    total_angle = np.bincount(mesh.faces.ravel(), angles.ravel(), minlength=mesh.n_vertices)

    best = _straighten(mesh, path.strip.tolist(), s, e)
    iterations, converged, contact = 0, False, False
    while True:
        candidate, sweeps, contact = _relax(mesh, topo, total_angle, best, s, e)
        if sweeps == 0:
            converged = True
            break
        if iterations >= max_iter:
            break
        iterations += 1
        decrease = (best.path.length - candidate.path.length) / max(best.path.length, np.finfo(float).tiny)
        logger.debug(
            "Path %d-%d iteration %d: length %.9g after %d sweeps", s, e, iterations, candidate.path.length, sweeps
        )
        best = candidate
        if decrease < tol:
            converged = True
            break

    if contact:
        logger.warning("Path %d-%d touches the mesh boundary", s, e)
    if not converged:
        logger.warning("Path %d-%d not straightened after %d iterations", s, e, max_iter)
    if best.path.length > path.length:
        return replace(path, iterations=iterations, converged=converged, boundary_contact=contact)
    return _assemble(mesh, s, e, best.strip, best.crossings, iterations, converged, contact)


# --- frame --------------------------------------------------------------------


def _segments_cross(p: FloatArray, q: FloatArray) -> bool:
    """Whether the polylines ``p`` and ``q`` cross properly (touching does not count)."""
    a, b = p[:-1, np.newaxis, :], p[1:, np.newaxis, :]
    c, d = q[np.newaxis, :-1, :], q[np.newaxis, 1:, :]

    def orient(u: FloatArray, v: FloatArray, w: FloatArray) -> FloatArray:
        return (v[..., 0] - u[..., 0]) * (w[..., 1] - u[..., 1]) - (v[..., 1] - u[..., 1]) * (w[..., 0] - u[..., 0])

    eps = 1e-14
    o1, o2 = orient(a, b, c), orient(a, b, d)
    o3, o4 = orient(c, d, a), orient(c, d, b)
    first = ((o1 > eps) & (o2 < -eps)) | ((o1 < -eps) & (o2 > eps))
    second = ((o3 > eps) & (o4 < -eps)) | ((o3 < -eps) & (o4 > eps))
    return bool(np.any(first & second))


def _merge(points: FloatArray) -> tuple[FloatArray, IntArray]:
    """Collapse points closer than ``MERGE_RADIUS``; returns unique points and the index map."""
    tree = cKDTree(points)
    representative = np.arange(len(points))
    for i, j in sorted(tree.query_pairs(MERGE_RADIUS)):
        representative[j] = min(representative[j], representative[i])
    keep, inverse = np.unique(representative, return_inverse=True)
    return points[keep], inverse.astype(np.int64)


def build_frame(
    mesh: TriangleMesh,
    param: DiskParameterization,
    features: Sequence[int],
    topology: Sequence[tuple[int, int]],
    settings: GeodesicSettings | None = None,
) -> GeodesicFrame:
    """
    Corrected paths between paired features and the disk partition they induce.

    ``topology`` pairs positions in ``features``. The partition vertices are
    the boundary loop images, the feature images and every path point; its
    triangulation is constrained to contain each path polyline.

    Raises:
        PathCrossingError: If two corrected paths cross in the disk
    """
    settings = settings or GeodesicSettings()
    features = np.asarray(features, dtype=np.int64)
    pairs = [(int(i), int(j)) for i, j in topology]
    vertex_pairs = [(int(features[i]), int(features[j])) for i, j in pairs]
    paths = [correct_path(mesh, p, settings.max_iter, settings.tol) for p in initial_paths(vertex_pairs, param)]

    polylines = [p.evaluate(mesh, param.image) for p in paths]
    for k in range(len(paths)):
        for m in range(k + 1, len(paths)):
            if _segments_cross(polylines[k], polylines[m]):
                raise PathCrossingError(pairs[k], pairs[m])

    candidates = np.vstack([param.image[mesh.boundary], param.image[features], *polylines])
    points, index = _merge(candidates)
    offset = len(mesh.boundary) + len(features)
    chains: list[list[int]] = []
    for line in polylines:
        chain = index[offset : offset + len(line)].tolist()
        offset += len(line)
        chains.append([v for k, v in enumerate(chain) if k == 0 or v != chain[k - 1]])

    faces, refined = constrained_triangulation(points, chains)
    partition = TriangleMesh(np.column_stack((points, np.zeros(len(points)))), faces)
    logger.info(
        "Geodesic frame: %d paths, partition with %d vertices and %d triangles",
        len(paths),
        partition.n_vertices,
        partition.n_faces,
    )
    return GeodesicFrame(features, pairs, paths, partition, refined)
