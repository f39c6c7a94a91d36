"""
Möbius maps of the disk and the sphere, and stereographic projection.

Stereographic projection is taken from the north pole ``(0, 0, 1)``; the south
pole maps to the origin and the equator to the unit circle.
"""

import numpy as np
import numpy.typing as npt

from confmorph.misc.exceptions import NorthPoleError
from confmorph.models.mesh import FloatArray
from confmorph.models.parameterization import MobiusDisk

POLE_TOLERANCE = 1e-12


def stereographic_to_plane(p: npt.ArrayLike) -> FloatArray:
    """
    Project unit points ``(x, y, z)`` to ``(x / (1 - z), y / (1 - z))``.

    Accepts a single point or an (N, 3) array.

    Raises:
        NorthPoleError: If a point is the north pole
    """
    p = np.asarray(p, dtype=np.float64)
    pts = np.atleast_2d(p)
    denominator = 1.0 - pts[:, 2]
    if np.any(denominator <= POLE_TOLERANCE):
        raise NorthPoleError()
    out = pts[:, :2] / denominator[:, np.newaxis]
    return out[0] if p.ndim == 1 else out


def plane_to_sphere(q: npt.ArrayLike) -> FloatArray:
    """Inverse stereographic projection, ``(2u, 2v, r^2 - 1) / (1 + r^2)``."""
    q = np.asarray(q, dtype=np.float64)
    pts = np.atleast_2d(q)
    r2 = np.sum(pts**2, axis=1)
    out = np.column_stack((2.0 * pts[:, 0], 2.0 * pts[:, 1], r2 - 1.0)) / (1.0 + r2)[:, np.newaxis]
    return out[0] if q.ndim == 1 else out


def mobius_disk_apply(m: MobiusDisk, z: npt.ArrayLike) -> FloatArray:
    """Apply ``m`` to 2-component points (a single point or an (N, 2) array)."""
    z = np.asarray(z, dtype=np.float64)
    pts = np.atleast_2d(z)
    w = m(pts[:, 0] + 1j * pts[:, 1])
    out = np.column_stack((w.real, w.imag))
    return out[0] if z.ndim == 1 else out


def ball_automorphism(c: FloatArray, x: FloatArray) -> FloatArray:
    """
    Möbius automorphism of the unit ball sending ``c`` to the origin.

    Maps the unit sphere onto itself; ``x`` is an (N, 3) array.
    """
    c2 = float(c @ c)
    diff = x - c
    numerator = (1.0 - c2) * diff - np.sum(diff**2, axis=1)[:, np.newaxis] * c
    denominator = 1.0 - 2.0 * (x @ c) + c2 * np.sum(x**2, axis=1)
    return numerator / denominator[:, np.newaxis]


def normalize_rows(x: FloatArray) -> FloatArray:
    return x / np.linalg.norm(x, axis=1)[:, np.newaxis]


def rotation_between(source: FloatArray, target: FloatArray) -> FloatArray:
    """Rotation matrix turning unit vector ``source`` onto unit vector ``target``."""
    v = np.cross(source, target)
    c = float(source @ target)
    if np.linalg.norm(v) < 1e-15:
        if c > 0:
            return np.eye(3)
        # half turn about any axis orthogonal to source
        axis = np.cross(source, [1.0, 0.0, 0.0])
        if np.linalg.norm(axis) < 1e-8:
            axis = np.cross(source, [0.0, 1.0, 0.0])
        axis /= np.linalg.norm(axis)
        return 2.0 * np.outer(axis, axis) - np.eye(3)
    vx = np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])
    return np.eye(3) + vx + vx @ vx / (1.0 + c)
