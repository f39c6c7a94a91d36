"""Sphere and disk parameterizations and disk Möbius transformations."""

import cmath
from dataclasses import dataclass, field

import numpy as np

from confmorph.models.mesh import FloatArray, TriangleMesh, VertexField


@dataclass(frozen=True, eq=False)
class SphereMap:
    """
    Per-vertex image on the unit sphere.

    ``energies`` holds the harmonic energy after every accepted heat-flow step
    (the first entry is the energy of the initial map).
    """

    mesh: TriangleMesh
    image: FloatArray
    energies: tuple[float, ...] = ()
    iterations: int = 0
    converged: bool = True
    dt: float | None = None

    def __post_init__(self) -> None:
        image = np.array(self.image, dtype=np.float64, copy=True)
        image.flags.writeable = False
        object.__setattr__(self, "image", image)


@dataclass(frozen=True, eq=False)
class DiskParameterization:
    """Per-vertex planar image in the closed unit disk and conformal factor."""

    mesh: TriangleMesh
    image: FloatArray
    lam: VertexField
    sphere: SphereMap | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        for name in ("image", "lam"):
            value = np.array(getattr(self, name), dtype=np.float64, copy=True)
            value.flags.writeable = False
            object.__setattr__(self, name, value)

    @property
    def z(self) -> np.ndarray:
        """Image as complex numbers."""
        return self.image[:, 0] + 1j * self.image[:, 1]

    @property
    def disk_mesh(self) -> TriangleMesh:
        """The parametric triangulation embedded in the z = 0 plane."""
        return self.mesh.with_positions(np.column_stack((self.image, np.zeros(len(self.image)))))

    def with_image(self, image: FloatArray) -> "DiskParameterization":
        return DiskParameterization(self.mesh, image, self.lam, self.sphere)


@dataclass(frozen=True)
class MobiusDisk:
    """Disk automorphism z -> e^{i theta} (z - a) / (1 - conj(a) z)."""

    a: complex = 0j
    theta: float = 0.0

    def __post_init__(self) -> None:
        if abs(self.a) >= 1.0:
            raise ValueError(f"Möbius parameter must satisfy |a| < 1, got |a| = {abs(self.a)}")
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "theta", float(self.theta))

    def __call__(self, z: np.ndarray | complex) -> np.ndarray:
        z = np.asarray(z, dtype=np.complex128)
        return cmath.exp(1j * self.theta) * (z - self.a) / (1.0 - np.conj(self.a) * z)

    def inverse(self) -> "MobiusDisk":
        rotation = cmath.exp(1j * self.theta)
        return MobiusDisk(-self.a * rotation, -self.theta)

    def compose(self, inner: "MobiusDisk") -> "MobiusDisk":
        """The map ``self ∘ inner``."""
        # the composite sends w to 0 iff inner(w) = self.a
        a = complex(inner.inverse()(self.a))
        rotation = complex(self(inner(1.0))) * (1.0 - a.conjugate()) / (1.0 - a)
        return MobiusDisk(a, cmath.phase(rotation))

    @classmethod
    def identity(cls) -> "MobiusDisk":
        return cls()


@dataclass(frozen=True)
class AngleDistortion:
    """Histogram of per-corner |angle_3d - angle_2d| in degrees."""

    bin_edges: FloatArray
    counts: np.ndarray
    mean: float
    p95: float
    max: float
    per_corner: FloatArray = field(repr=False)
