"""
Spline homotopy of signatures across registered keyframes.

Every keyframe signature is first pulled back onto the unified mesh (the
first keyframe's) through the composed registrations, then each per-vertex
component gets a natural cubic spline in time.
"""

from collections.abc import Sequence

import numpy as np
import numpy.typing as npt
from scipy.interpolate import CubicSpline

from confmorph.misc.exceptions import FieldLengthError, KnotOrderError
from confmorph.misc.logger import logger
from confmorph.models.mesh import FloatArray, IntArray
from confmorph.models.parameterization import DiskParameterization
from confmorph.models.signature import RegistrationMap, SurfaceSignature
from confmorph.models.track import KeyframeTrack, MorphState, TrackEvaluation
from confmorph.services.registration import transfer_signature

LAMBDA_FLOOR = 1e-8


def fit_track(times: npt.ArrayLike, values: Sequence[npt.ArrayLike]) -> KeyframeTrack:
    """
    Natural cubic spline through ``values[i]`` at ``times[i]``; linear for two knots.

    Raises:
        KnotOrderError: If there are fewer than two knots or times do not increase
        FieldLengthError: If the fields differ in shape or count
    """
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or len(times) < 2 or np.any(np.diff(times) <= 0.0):
        raise KnotOrderError(times.tolist())
    fields = [np.asarray(v, dtype=np.float64) for v in values]
    shapes = {f.shape for f in fields}
    if len(fields) != len(times) or len(shapes) != 1:
        raise FieldLengthError([len(f) for f in fields])
    stacked = np.stack(fields)
    stacked.flags.writeable = False
    spline = CubicSpline(times, stacked, axis=0, bc_type="natural", extrapolate=True)
    return KeyframeTrack(times, stacked, spline)


def eval_track(track: KeyframeTrack, t: float) -> TrackEvaluation:
    """Spline value at ``t``; knot times return the stored field itself."""
    knot = np.flatnonzero(track.times == t)
    if len(knot):
        values = track.values[knot[0]].copy()
    else:
        values = np.asarray(track.spline(t))
    return TrackEvaluation(float(t), values, track.extrapolates(t))


class SignatureHomotopy:
    """
    Time-continuous signature on the unified mesh.

    ``keyframes[i]`` lives on ``params[i].mesh``; ``registrations[i]`` maps
    keyframe ``i`` to ``i + 1``. The H, conformal factor, boundary and colour
    tracks are fitted once and evaluated on demand.
    """

    def __init__(
        self,
        times: npt.ArrayLike,
        keyframes: Sequence[SurfaceSignature],
        params: Sequence[DiskParameterization],
        registrations: Sequence[RegistrationMap],
    ) -> None:
        times = np.asarray(times, dtype=np.float64)
        if not (len(keyframes) == len(params) == len(registrations) + 1 == len(times)):
            raise FieldLengthError(
                [len(times), len(keyframes), len(params), len(registrations) + 1], operation="morph_signature"
            )
        self.unified = params[0]
        self.images = [params[0].image]
        self.transferred = [keyframes[0]]
        boundary: IntArray = params[0].mesh.boundary
        for reg, sig, pb in zip(registrations, keyframes[1:], params[1:], strict=True):
            images = reg.images if len(self.images) == 1 else reg(self.images[-1])
            self.images.append(images)
            self.transferred.append(transfer_signature(reg, sig, pb, images, boundary))
        self._fit(times)

    @classmethod
    def from_transferred(cls, times: npt.ArrayLike, signatures: Sequence[SurfaceSignature]) -> "SignatureHomotopy":
        """Homotopy of signatures that already share one mesh."""
        self = cls.__new__(cls)
        self.transferred = list(signatures)
        self.images = []
        self._fit(np.asarray(times, dtype=np.float64))
        return self

    def _fit(self, times: FloatArray) -> None:
        sigs = self.transferred
        self.times = times
        self.H = fit_track(times, [s.H for s in sigs])
        self.lam = fit_track(times, [s.lam for s in sigs])
        self.boundary = fit_track(times, [s.boundary_positions for s in sigs])
        colors = [s.colors for s in sigs]
        self.colors = None if any(c is None for c in colors) else fit_track(times, colors)  # type: ignore[arg-type]
        logger.info("Fitted homotopy over %d keyframes, %d vertices", len(times), len(sigs[0].H))

    def evaluate(self, t: float) -> MorphState:
        """Signature at ``t``; conformal factors below the floor are raised to it and counted."""
        H = eval_track(self.H, t)
        lam = eval_track(self.lam, t).values
        clamped = int(np.count_nonzero(lam < LAMBDA_FLOOR))
        if clamped:
            logger.warning("t=%.4f: %d conformal factor(s) clamped to %.0e", t, clamped, LAMBDA_FLOOR)
            lam = np.maximum(lam, LAMBDA_FLOOR)
        boundary = eval_track(self.boundary, t).values
        colors = None
        if self.colors is not None:
            colors = np.clip(eval_track(self.colors, t).values, 0.0, 1.0)
        return MorphState(float(t), SurfaceSignature(H.values, lam, boundary, colors), H.extrapolated, clamped)


def morph_signature(
    keyframes: Sequence[SurfaceSignature],
    registrations: Sequence[RegistrationMap],
    times: npt.ArrayLike,
    t: float,
    params: Sequence[DiskParameterization],
) -> SurfaceSignature:
    """One-shot evaluation of :class:`SignatureHomotopy` at ``t``."""
    return SignatureHomotopy(times, keyframes, params, registrations).evaluate(t).signature
