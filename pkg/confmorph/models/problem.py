"""Reconstruction problems and results."""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial.distance import pdist

from confmorph.misc.exceptions import ValidationError
from confmorph.models.mesh import FloatArray, IntArray, TriangleMesh
from confmorph.models.parameterization import DiskParameterization
from confmorph.models.signature import SurfaceSignature

RELATIVE_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class ReconstructionProblem:
    """
    Signature, boundary curve and parametric disk mesh of the surface to rebuild.

    ``uv`` and ``faces`` are the unified mesh's disk triangulation; the
    boundary curve is ``signature.boundary_positions`` along ``boundary``.
    ``tol`` defaults to 1e-7 times the boundary curve's diameter.
    """

    signature: SurfaceSignature
    faces: IntArray
    uv: FloatArray
    boundary: IntArray
    tol: float | None = None
    max_iter: int = 100
    param_mesh: TriangleMesh = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.signature.boundary_positions) != len(self.boundary):
            raise ValidationError(
                f"{len(self.signature.boundary_positions)} boundary positions for {len(self.boundary)} boundary vertices",
                field="boundary_positions",
                operation="reconstruct",
            )
        if self.signature.n_vertices != len(self.uv):
            raise ValidationError(
                f"signature has {self.signature.n_vertices} values for {len(self.uv)} vertices",
                field="signature",
                operation="reconstruct",
            )
        if self.tol is not None and not self.tol > 0.0:
            raise ValidationError("tolerance must be positive", field="tol", value=self.tol, operation="reconstruct")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be at least 1", field="max_iter", value=self.max_iter, operation="reconstruct")
        uv = np.asarray(self.uv, dtype=np.float64)
        object.__setattr__(self, "param_mesh", TriangleMesh(np.column_stack((uv, np.zeros(len(uv)))), self.faces))

    @classmethod
    def over(
        cls, signature: SurfaceSignature, param: DiskParameterization, tol: float | None = None, max_iter: int = 100
    ) -> "ReconstructionProblem":
        """Problem on the disk triangulation of ``param``."""
        return cls(signature, param.mesh.faces, param.image[:, :2], param.mesh.boundary, tol, max_iter)

    @cached_property
    def tolerance(self) -> float:
        if self.tol is not None:
            return self.tol
        curve = np.asarray(self.signature.boundary_positions)
        diameter = float(pdist(curve).max()) if len(curve) > 1 else 1.0
        return RELATIVE_TOL * max(diameter, np.finfo(np.float64).eps)


@dataclass(frozen=True, eq=False)
class ReconstructionResult:
    mesh: TriangleMesh
    iterations: int
    displacements: tuple[float, ...]
    converged: bool
    normals: FloatArray | None = field(default=None, repr=False)

    @property
    def displacement(self) -> float:
        return self.displacements[-1] if self.displacements else 0.0
