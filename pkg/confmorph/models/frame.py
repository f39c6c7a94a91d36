"""Surface paths between feature points and the frame they induce on the disk."""

from dataclasses import dataclass, field

import numpy as np

from confmorph.models.mesh import FloatArray, IntArray, TriangleMesh


@dataclass(frozen=True, eq=False)
class SurfacePath:
    """
    Polyline on a triangle mesh between two feature vertices.

    Point ``k`` is ``sum(bary[k] * corners(faces[k]))``. ``strip`` is the
    edge-connected face sequence the path runs through; the first point lies in
    ``strip[0]``, the last in ``strip[-1]`` and the crossing of the shared edge
    of ``strip[i]`` and ``strip[i + 1]`` is assigned to ``strip[i + 1]``, so
    consecutive points always sit in identical or edge-adjacent faces.
    """

    start: int
    end: int
    strip: IntArray
    faces: IntArray
    bary: FloatArray
    length: float
    iterations: int = 0
    converged: bool = True
    boundary_contact: bool = False

    def __post_init__(self) -> None:
        bary = np.asarray(self.bary, dtype=np.float64)
        if bary.ndim != 2 or bary.shape[1] != 3 or len(bary) != len(self.faces):
            raise ValueError(f"barycentric array of shape {bary.shape} for {len(self.faces)} points")
        if bary.min() < 0.0 or np.abs(bary.sum(axis=1) - 1.0).max() > 1e-10:
            raise ValueError("barycentric triples must be nonnegative and sum to 1")

    def __len__(self) -> int:
        return len(self.faces)

    def evaluate(self, mesh: TriangleMesh, values: FloatArray | None = None) -> FloatArray:
        """Interpolate per-vertex ``values`` (default: 3D positions) at the path points."""
        values = mesh.positions if values is None else np.asarray(values, dtype=np.float64)
        return np.einsum("nk,nkc->nc", self.bary, values[mesh.faces[self.faces]])


@dataclass(frozen=True, eq=False)
class GeodesicFrame:
    """
    Feature points, the corrected paths between them and the disk partition.

    ``path_vertices[k]`` lists the partition vertices traced by the disk
    image of ``paths[k]``, so each frame edge is a chain of partition edges.
    """

    features: IntArray
    pairs: list[tuple[int, int]]
    paths: list[SurfacePath]
    partition: TriangleMesh
    path_vertices: list[IntArray] = field(default_factory=list)

    @property
    def edges(self) -> list[tuple[tuple[int, int], SurfacePath]]:
        return list(zip(self.pairs, self.paths, strict=True))

    @property
    def partition_vertices(self) -> FloatArray:
        return self.partition.positions[:, :2]

    @property
    def constrained_edges(self) -> set[tuple[int, int]]:
        """Undirected partition edges lying on frame paths."""
        out: set[tuple[int, int]] = set()
        for chain in self.path_vertices:
            for a, b in zip(chain[:-1], chain[1:], strict=True):
                out.add((min(int(a), int(b)), max(int(a), int(b))))
        return out
