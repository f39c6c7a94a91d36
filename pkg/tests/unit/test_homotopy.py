"""Unit tests for keyframe splines and the signature homotopy."""

import numpy as np
import pytest

from confmorph.misc.exceptions import FieldLengthError, KnotOrderError
from confmorph.models.parameterization import MobiusDisk
from confmorph.models.signature import SurfaceSignature
from confmorph.services.geodesic import build_frame
from confmorph.services.homotopy import LAMBDA_FLOOR, SignatureHomotopy, eval_track, fit_track, morph_signature
from confmorph.services.matching import mobius_only
from confmorph.services.operators import surface_signature
from confmorph.services.registration import build_registration
from tests.fixtures.sample_meshes import hemisphere_parameterization
from tests.utils import natural_spline

TIMES = np.array([0.0, 1.0, 2.5, 4.0])


@pytest.fixture
def knot_values() -> list[np.ndarray]:
    rng = np.random.default_rng(11)
    return [rng.normal(size=(5, 3)) for _ in TIMES]


def signature(h: float, lam: float, n: int = 4) -> SurfaceSignature:
    return SurfaceSignature(np.full(n, h), np.full(n, lam), np.zeros((2, 3)))


class TestTrack:
    """Natural cubic splines through keyframe fields."""

    def test_knots_are_exact(self, knot_values):
        """Test that knot times return the stored fields bit for bit."""
        track = fit_track(TIMES, knot_values)
        for t, values in zip(TIMES, knot_values, strict=True):
            evaluation = eval_track(track, float(t))
            np.testing.assert_array_equal(evaluation.values, values)
            assert not evaluation.extrapolated

    @pytest.mark.parametrize("t", [0.3, 1.7, 3.9])
    def test_matches_dense_spline(self, knot_values, t: float):
        """Test agreement with a dense natural spline solve."""
        track = fit_track(TIMES, knot_values)
        expected = natural_spline(TIMES, np.stack(knot_values), t)
        np.testing.assert_allclose(eval_track(track, t).values, expected, atol=1e-10)

    @pytest.mark.parametrize("t", [-0.5, 4.75])
    def test_extrapolation(self, knot_values, t: float):
        """Test that times outside the knots continue the end pieces and are flagged."""
        track = fit_track(TIMES, knot_values)
        evaluation = eval_track(track, t)
        assert evaluation.extrapolated
        np.testing.assert_allclose(evaluation.values, natural_spline(TIMES, np.stack(knot_values), t), atol=1e-10)

    def test_two_knots_are_linear(self):
        """Test the linear interpolant for two keyframes."""
        track = fit_track([0.0, 2.0], [np.zeros(3), np.full(3, 4.0)])
        np.testing.assert_allclose(eval_track(track, 0.5).values, 1.0)
        assert track.coefficients.shape[:2] == (4, 1)

    @pytest.mark.parametrize("times", [[0.0, 0.0, 1.0], [1.0, 0.5], [0.0]])
    def test_knot_order(self, times: list[float]):
        """Test rejection of repeated, decreasing or single knots."""
        with pytest.raises(KnotOrderError):
            fit_track(times, [np.zeros(2)] * len(times))

    def test_field_shapes(self):
        """Test rejection of fields of different lengths."""
        with pytest.raises(FieldLengthError):
            fit_track([0.0, 1.0], [np.zeros(3), np.zeros(4)])


class TestSignatureHomotopy:
    """Evaluating signatures between and beyond keyframes."""

    def test_linear_between_two_keyframes(self):
        """Test the midpoint of two transferred signatures."""
        homotopy = SignatureHomotopy.from_transferred([0.0, 1.0], [signature(0.0, 1.0), signature(2.0, 3.0)])
        state = homotopy.evaluate(0.25)
        np.testing.assert_allclose(state.signature.H, 0.5)
        np.testing.assert_allclose(state.signature.lam, 1.5)
        assert not state.extrapolated
        assert state.clamped == 0
        assert state.n_vertices == 4

    def test_lambda_floor(self):
        """Test that extrapolated conformal factors are clamped and counted."""
        homotopy = SignatureHomotopy.from_transferred([0.0, 1.0], [signature(0.0, 1.0), signature(0.0, 0.5)])
        state = homotopy.evaluate(3.0)
        assert state.extrapolated
        assert state.clamped == 4
        np.testing.assert_allclose(state.signature.lam, LAMBDA_FLOOR)

    def test_colors_are_clipped(self):
        """Test that interpolated colours stay in [0, 1]."""
        first = SurfaceSignature(np.zeros(2), np.ones(2), np.zeros((1, 3)), np.zeros((2, 3)))
        second = SurfaceSignature(np.zeros(2), np.ones(2), np.zeros((1, 3)), np.ones((2, 3)))
        homotopy = SignatureHomotopy.from_transferred([0.0, 1.0], [first, second])
        np.testing.assert_allclose(homotopy.evaluate(2.0).signature.colors, 1.0)
        np.testing.assert_allclose(homotopy.evaluate(0.5).signature.colors, 0.5)

    def test_missing_colors(self):
        """Test that colours are dropped unless every keyframe has them."""
        first = SurfaceSignature(np.zeros(2), np.ones(2), np.zeros((1, 3)), np.zeros((2, 3)))
        second = SurfaceSignature(np.zeros(2), np.ones(2), np.zeros((1, 3)))
        homotopy = SignatureHomotopy.from_transferred([0.0, 1.0], [first, second])
        assert homotopy.evaluate(0.5).signature.colors is None

    def test_registered_keyframes(self):
        """Test a homotopy built through an identity registration."""
        param = hemisphere_parameterization(5)
        frame = build_frame(param.mesh, param, [0, 25], [(0, 1)])
        reg = build_registration(param, param, frame, mobius_only(MobiusDisk.identity(), 5))
        sig = surface_signature(param.mesh, param)
        value = morph_signature([sig, sig], [reg], [0.0, 1.0], 0.5, [param, param])
        np.testing.assert_allclose(value.H, sig.H, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(value.lam, sig.lam, rtol=1e-10)

    def test_mismatched_inputs(self):
        """Test that keyframes, parameterizations and registrations must agree in count."""
        param = hemisphere_parameterization(3)
        sig = surface_signature(param.mesh, param)
        with pytest.raises(FieldLengthError):
            SignatureHomotopy([0.0, 1.0], [sig, sig], [param, param], [])
