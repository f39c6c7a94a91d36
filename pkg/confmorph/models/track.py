"""Keyframe tracks and their evaluations."""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from confmorph.models.mesh import FloatArray
from confmorph.models.signature import SurfaceSignature


@dataclass(frozen=True, eq=False)
class KeyframeTrack:
    """
    Natural cubic spline through per-keyframe fields.

    ``values`` has shape (N + 1, V, ...) with one field per knot in ``times``.
    """

    times: FloatArray
    values: FloatArray
    spline: CubicSpline = field(repr=False)

    @property
    def n_keyframes(self) -> int:
        return len(self.times)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    @property
    def coefficients(self) -> FloatArray:
        """Polynomial coefficients, shape (4, N, V, ...), highest degree first."""
        return self.spline.c

    def extrapolates(self, t: float) -> bool:
        lo, hi = self.span
        return bool(t < lo or t > hi)


@dataclass(frozen=True, eq=False)
class TrackEvaluation:
    t: float
    values: FloatArray
    extrapolated: bool = False


@dataclass(frozen=True, eq=False)
class MorphState:
    """Interpolated signature at time ``t``; ``clamped`` counts conformal factors raised to the floor."""

    t: float
    signature: SurfaceSignature
    extrapolated: bool = False
    clamped: int = 0

    @property
    def n_vertices(self) -> int:
        return len(np.asarray(self.signature.H))
