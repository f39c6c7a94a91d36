"""Landmarks, thin-plate fields and disk matchings."""

from dataclasses import dataclass
from typing import Literal

import numpy as np

from confmorph.misc.exceptions import LandmarkCountError, OutsideDiskError
from confmorph.models.mesh import FloatArray, IntArray
from confmorph.models.parameterization import MobiusDisk

DISK_SLACK = 1e-6


def plate_kernel(r: FloatArray) -> FloatArray:
    """r^2 log r, continuously extended by 0 at r = 0."""
    r = np.asarray(r, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(r > 0.0, r * r * np.log(np.where(r > 0.0, r, 1.0)), 0.0)


def grid_centers(n: int) -> FloatArray:
    """Row-major n x n grid on [-1, 1]^2: index j = row * n + column, rows along y."""
    axis = np.linspace(-1.0, 1.0, n)
    xx, yy = np.meshgrid(axis, axis)
    return np.column_stack((xx.ravel(), yy.ravel()))


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    """Paired landmarks with their 3D positions and disk images."""

    source_index: IntArray
    target_index: IntArray
    source_3d: FloatArray
    target_3d: FloatArray
    source_disk: FloatArray
    target_disk: FloatArray

    def __post_init__(self) -> None:
        counts = {len(self.source_index), len(self.target_index), len(self.source_3d), len(self.target_3d), len(self.source_disk), len(self.target_disk)}
        if len(counts) != 1:
            raise LandmarkCountError(min(counts), max(counts), "landmark_set")
        for name in ("source_disk", "target_disk"):
            radius = np.linalg.norm(getattr(self, name), axis=1) if len(self) else np.zeros(0)
            outside = np.flatnonzero(radius > 1.0 + DISK_SLACK)
            if len(outside):
                raise OutsideDiskError(float(radius[outside[0]]), int(outside[0]))

    def __len__(self) -> int:
        return len(self.source_index)

    @classmethod
    def from_disk(cls, source_disk: FloatArray, target_disk: FloatArray) -> "LandmarkSet":
        """Disk-only landmarks (3D data zero), for matching experiments on the disk."""
        source_disk = np.atleast_2d(np.asarray(source_disk, dtype=np.float64))
        target_disk = np.atleast_2d(np.asarray(target_disk, dtype=np.float64))
        m = len(source_disk)
        index = np.arange(m, dtype=np.int64)
        zeros = np.zeros((m, 3))
        return cls(index, index.copy(), zeros, zeros.copy(), source_disk, target_disk)


@dataclass(frozen=True, eq=False)
class ThinPlateField:
    """
    Weighted r^2 log r field over a grid of centers.

    The displacement at ``x`` is sum_j weights_j U(|x - c_j|) alpha_j with
    ``alpha`` of shape (n^2, 2).
    """

    n: int
    centers: FloatArray
    alpha: FloatArray
    weights: FloatArray
    epsilon: float
    residual: float = 0.0
    method: Literal["qr", "tikhonov", "zero"] = "qr"

    @property
    def alpha1(self) -> FloatArray:
        return self.alpha[:, 0]

    @property
    def alpha2(self) -> FloatArray:
        return self.alpha[:, 1]

    def design(self, points: FloatArray) -> FloatArray:
        """Matrix S with S_ij = weights_j U(|p_i - c_j|)."""
        points = np.atleast_2d(points)
        r = np.linalg.norm(points[:, np.newaxis, :] - self.centers[np.newaxis, :, :], axis=2)
        return plate_kernel(r) * self.weights[np.newaxis, :]

    def displacement(self, points: FloatArray) -> FloatArray:
        return self.design(points) @ self.alpha

    @classmethod
    def zero(cls, n: int, weights: FloatArray | None = None) -> "ThinPlateField":
        centers = grid_centers(n)
        w = np.ones(len(centers)) if weights is None else np.asarray(weights, dtype=np.float64)
        return cls(n, centers, np.zeros((len(centers), 2)), w, 0.0, 0.0, "zero")


@dataclass(frozen=True, eq=False)
class DiskMatching:
    """Composite disk map: the plate displacement first, then the Möbius map."""

    mobius: MobiusDisk
    plate: ThinPlateField
    order: Literal["plate_then_mobius"] = "plate_then_mobius"


@dataclass(frozen=True)
class MatchingEnergies:
    E_D: float
    E_loc: float
    E_global: float

    def as_row(self) -> tuple[float, float, float]:
        return (self.E_D, self.E_loc, self.E_global)

    def dominated_by(self, other: "MatchingEnergies") -> bool:
        """True if no energy exceeds the corresponding one of ``other``."""
        return all(a <= b for a, b in zip(self.as_row(), other.as_row(), strict=True))


@dataclass(frozen=True, eq=False)
class MatchingComparison:
    """The Möbius-only matching against the composite one."""

    omt: DiskMatching
    omgmf: DiskMatching
    omt_energies: MatchingEnergies
    omgmf_energies: MatchingEnergies
    escalations: int = 0
