"""
Triangle mesh model.

A ``TriangleMesh`` is validated once at construction: face indices in range and
distinct, every directed edge used by at most one face (which makes the mesh
edge-manifold and consistently oriented), vertex graph connected, and at most
one boundary loop. Arrays are made read-only so a mesh can be shared between
threads.
"""

from dataclasses import dataclass, field
from functools import cached_property
from hashlib import blake2b

import numpy as np
import numpy.typing as npt
from scipy import sparse
from scipy.sparse import csgraph

from confmorph.misc.exceptions import BoundaryLoopError, DegenerateFaceError, NonManifoldMeshError

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]

# Per-vertex values aligned with a mesh's vertex list, shape (V,) or (V, k).
VertexField = FloatArray
# Symmetric vertex-by-vertex operator.
SparseOperator = sparse.csr_matrix


def _frozen(array: npt.ArrayLike, dtype: type) -> npt.NDArray:
    out = np.array(array, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Oriented, connected, edge-manifold triangle mesh with zero or one boundary loop."""

    positions: FloatArray
    faces: IntArray
    colors: FloatArray | None = None
    boundary: IntArray = field(init=False)

    def __post_init__(self) -> None:
        positions = _frozen(self.positions, np.float64)
        faces = _frozen(self.faces, np.int64)
        if positions.ndim != 2 or positions.shape[1] != 3:
            raise NonManifoldMeshError(f"positions must have shape (V, 3), got {positions.shape}")
        if faces.ndim != 2 or faces.shape[1] != 3 or len(faces) == 0:
            raise NonManifoldMeshError(f"faces must have shape (F, 3) with F > 0, got {faces.shape}")
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "faces", faces)
        if self.colors is not None:
            colors = _frozen(self.colors, np.float64)
            if colors.shape != positions.shape:
                raise NonManifoldMeshError(f"colors must have shape {positions.shape}, got {colors.shape}")
            object.__setattr__(self, "colors", colors)
        self._validate()
        object.__setattr__(self, "boundary", _frozen(self._boundary_loop(), np.int64))

    # --- validation ----------------------------------------------------------

    def _validate(self) -> None:
        n, f = len(self.positions), self.faces
        if f.min() < 0 or f.max() >= n:
            raise NonManifoldMeshError(f"face index out of range [0, {n})")
        repeated = np.flatnonzero((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0]))
        if len(repeated):
            raise DegenerateFaceError(int(repeated[0]), "repeated vertex index", operation="load_mesh")
        if self.adj_dir.data.max() > 1:
            raise NonManifoldMeshError(
                "a directed edge is used by two faces (inconsistent orientation or more than two faces per edge)"
            )
        used = np.zeros(n, dtype=bool)
        used[f.ravel()] = True
        if not used.all():
            raise NonManifoldMeshError(f"{int((~used).sum())} vertices are not referenced by any face")
        count, _ = csgraph.connected_components(self.adj_sym, directed=False)
        if count != 1:
            raise NonManifoldMeshError(f"face graph has {count} connected components")

    def _boundary_loop(self) -> IntArray:
        loops = self.boundary_loops()
        if len(loops) > 1:
            raise BoundaryLoopError(len(loops), "at most one boundary loop")
        return np.array(loops[0] if loops else [], dtype=np.int64)

    # --- adjacency -------------------------------------------------------------

    @cached_property
    def adj_dir(self) -> sparse.csr_matrix:
        """Directed adjacency: entry (i, j) counts faces using the half-edge i -> j."""
        t = self.faces
        i = t.reshape(-1)
        j = t[:, [1, 2, 0]].reshape(-1)
        n = len(self.positions)
        return sparse.csr_matrix((np.ones(len(i)), (i, j)), shape=(n, n))

    @cached_property
    def adj_sym(self) -> sparse.csr_matrix:
        """Undirected adjacency: 2 on interior edges, 1 on boundary edges."""
        return (self.adj_dir + self.adj_dir.T).tocsr()

    def boundary_loops(self) -> list[list[int]]:
        """Cycles of unmatched half-edges, each starting at its lowest vertex index."""
        boundary = (self.adj_dir - self.adj_dir.T).tocoo()
        mask = boundary.data > 0
        heads, tails = boundary.row[mask], boundary.col[mask]
        if len(heads) == 0:
            return []
        if len(np.unique(heads)) != len(heads):
            raise NonManifoldMeshError("boundary vertex with more than one outgoing boundary edge")
        successor = dict(zip(heads.tolist(), tails.tolist(), strict=True))
        loops: list[list[int]] = []
        remaining = set(successor)
        while remaining:
            start = min(remaining)
            loop = [start]
            remaining.discard(start)
            current = successor[start]
            while current != start:
                if current not in remaining:
                    raise NonManifoldMeshError("boundary half-edges do not form simple loops")
                loop.append(current)
                remaining.discard(current)
                current = successor[current]
            loops.append(loop)
        return loops

    @cached_property
    def edges(self) -> IntArray:
        """Unique undirected edges (i < j), sorted."""
        upper = sparse.triu(self.adj_sym, 1).tocoo()
        order = np.lexsort((upper.col, upper.row))
        return np.column_stack((upper.row[order], upper.col[order])).astype(np.int64)

    @cached_property
    def edge_faces(self) -> sparse.csr_matrix:
        """Entry (i, j) holds 1 + index of the face owning half-edge i -> j."""
        t = self.faces
        i = t.reshape(-1)
        j = t[:, [1, 2, 0]].reshape(-1)
        n = len(self.positions)
        data = np.repeat(np.arange(1, len(t) + 1), 3)
        return sparse.csr_matrix((data, (i, j)), shape=(n, n))

    def face_of_half_edge(self, i: int, j: int) -> int:
        """Face containing the directed edge i -> j, or -1."""
        return int(self.edge_faces[i, j]) - 1

    @cached_property
    def vertex_faces(self) -> sparse.csr_matrix:
        """Incidence matrix, rows are vertices and columns faces."""
        rows = self.faces.reshape(-1)
        cols = np.repeat(np.arange(len(self.faces)), 3)
        return sparse.csr_matrix(
            (np.ones(len(rows)), (rows, cols)), shape=(len(self.positions), len(self.faces))
        )

    # --- geometry ----------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def is_closed(self) -> bool:
        return len(self.boundary) == 0

    @cached_property
    def boundary_mask(self) -> npt.NDArray[np.bool_]:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary] = True
        return mask

    @cached_property
    def interior(self) -> IntArray:
        return np.flatnonzero(~self.boundary_mask)

    def euler(self) -> int:
        """V - E + F."""
        return self.n_vertices - len(self.edges) + self.n_faces

    def face_cross(self, positions: FloatArray | None = None) -> FloatArray:
        """Un-normalized face normals (twice the area vector) for the given embedding."""
        v = self.positions if positions is None else positions
        if v.shape[1] == 2:
            v = np.column_stack((v, np.zeros(len(v))))
        v0, v1, v2 = v[self.faces[:, 0]], v[self.faces[:, 1]], v[self.faces[:, 2]]
        return np.cross(v1 - v0, v2 - v0)

    def face_areas(self, positions: FloatArray | None = None) -> FloatArray:
        return 0.5 * np.linalg.norm(self.face_cross(positions), axis=1)

    def vertex_areas(self, positions: FloatArray | None = None) -> FloatArray:
        """One-third of the one-ring area per vertex."""
        area3 = np.repeat(self.face_areas(positions)[:, np.newaxis], 3, 1)
        return np.bincount(self.faces.reshape(-1), area3.reshape(-1), minlength=self.n_vertices) / 3.0

    def vertex_normals(self, positions: FloatArray | None = None) -> FloatArray:
        """Area-weighted average of incident face normals, normalized; zero where they cancel."""
        summed = self.vertex_faces @ self.face_cross(positions)
        length = np.linalg.norm(summed, axis=1)
        out = np.zeros_like(summed)
        ok = length > np.finfo(np.float64).eps
        out[ok] = summed[ok] / length[ok, np.newaxis]
        return out

    def mean_edge_length(self, positions: FloatArray | None = None) -> float:
        v = self.positions if positions is None else positions
        e = self.edges
        return float(np.linalg.norm(v[e[:, 0]] - v[e[:, 1]], axis=1).mean())

    def with_positions(self, positions: FloatArray, colors: FloatArray | None = None) -> "TriangleMesh":
        """Same connectivity, new embedding."""
        return TriangleMesh(positions, self.faces, colors)

    @cached_property
    def fingerprint(self) -> str:
        """Digest of the connectivity, used as a cache key."""
        return blake2b(self.faces.tobytes(), digest_size=16).hexdigest()
