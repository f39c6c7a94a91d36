"""Surface differences over a shared parametric disk mesh."""

import numpy as np
import numpy.typing as npt

from confmorph.misc.exceptions import ConnectivityMismatchError, ZeroDenominatorError
from confmorph.models.mesh import TriangleMesh


def surface_diff(Sx: TriangleMesh, Sy: TriangleMesh, uv: npt.ArrayLike) -> tuple[float, float]:
    """
    L2 and Linf distance of two embeddings of one parametric mesh.

    L2 integrates the squared distance over the disk with the one-point
    (centroid) rule per parametric triangle; Linf is the largest vertex distance.

    Raises:
        ConnectivityMismatchError: If the meshes or ``uv`` disagree on connectivity
    """
    uv = np.asarray(uv, dtype=np.float64)
    if Sx.n_vertices != Sy.n_vertices or Sx.n_vertices != len(uv):
        raise ConnectivityMismatchError(f"vertex counts {Sx.n_vertices}, {Sy.n_vertices}, {len(uv)}")
    if Sx.faces.shape != Sy.faces.shape or not np.array_equal(Sx.faces, Sy.faces):
        raise ConnectivityMismatchError("face lists differ")
    diff = Sx.positions - Sy.positions
    area = Sx.face_areas(uv[:, :2])
    centroid = diff[Sx.faces].mean(axis=1)
    l2 = float(np.sqrt(np.sum(area * np.sum(centroid**2, axis=1))))
    linf = float(np.linalg.norm(diff, axis=1).max())
    return l2, linf


def improvement_rate(S_M: TriangleMesh, S_G: TriangleMesh, S_ref: TriangleMesh, uv: npt.ArrayLike) -> float:
    """
    Relative L2 gain of ``S_G`` over ``S_M`` against the reference surface.

    Raises:
        ZeroDenominatorError: If ``S_M`` coincides with the reference
    """
    baseline, _ = surface_diff(S_M, S_ref, uv)
    if baseline == 0.0:
        raise ZeroDenominatorError()
    improved, _ = surface_diff(S_G, S_ref, uv)
    return (baseline - improved) / baseline
