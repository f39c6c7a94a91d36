"""Unit tests for planar point location."""

import numpy as np
import pytest

from confmorph.misc.exceptions import PointLocationError
from confmorph.services.locate import TriangleLocator, barycentric, locate
from tests.fixtures.sample_meshes import fan, ring_disk, square_grid


class TestBarycentric:
    def test_vertices_and_centroid(self):
        """Test coordinates at a corner and at the centroid."""
        a, b, c = np.array([[0.0, 0.0]]), np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])
        np.testing.assert_allclose(barycentric(np.array([0.0, 0.0]), a, b, c), [[1.0, 0.0, 0.0]])
        np.testing.assert_allclose(barycentric(np.array([1 / 3, 1 / 3]), a, b, c), [[1 / 3, 1 / 3, 1 / 3]])


class TestTriangleLocator:
    """Grid-bucketed point location."""

    def test_reproduces_linear_functions(self):
        """Test that interpolation of a linear field is exact."""
        mesh = ring_disk(4)
        locator = TriangleLocator(mesh.positions, mesh.faces)
        values = 2.0 * mesh.positions[:, 0] - mesh.positions[:, 1] + 0.5
        rng = np.random.default_rng(7)
        radius = 0.9 * np.sqrt(rng.uniform(size=50))
        angle = rng.uniform(0.0, 2.0 * np.pi, size=50)
        points = np.column_stack((radius * np.cos(angle), radius * np.sin(angle)))
        expected = 2.0 * points[:, 0] - points[:, 1] + 0.5
        np.testing.assert_allclose(locator.interpolate(values, points), expected, atol=1e-12)

    def test_shared_edge_takes_lowest_face(self):
        """Test the tie rule for a point on an edge shared by two faces."""
        grid = square_grid(1)
        location = locate([0.5, 0.5], grid.positions, grid.faces)
        assert location.face == 0

    def test_vertex_coordinates(self):
        """Test that a vertex gets a unit coordinate."""
        mesh = fan(6)
        location = TriangleLocator(mesh.positions, mesh.faces).locate(mesh.positions[0, :2])
        assert location.face == 0
        assert location.coords.max() == pytest.approx(1.0)

    def test_snap_near_boundary(self):
        """Test that a point just outside an edge is snapped onto it."""
        grid = square_grid(2)
        location = TriangleLocator(grid.positions, grid.faces).locate([0.25, -1e-8])
        assert location.coords.min() >= 0.0
        assert location.coords.sum() == pytest.approx(1.0)

    def test_clamp_inside_unit_disk(self):
        """Test that clamping projects circle slivers onto the nearest triangle."""
        mesh = fan(6)
        locator = TriangleLocator(mesh.positions, mesh.faces)
        sliver = np.array([np.cos(np.pi / 6), np.sin(np.pi / 6)])
        with pytest.raises(PointLocationError):
            locator.locate(sliver)
        location = locator.locate(sliver, clamp=True)
        assert location.face == 0
        assert location.coords[0] == pytest.approx(0.0, abs=1e-12)

    def test_clamp_only_in_slivers(self):
        """Test that clamping leaves uncovered parts of the disk other than slivers an error."""
        mesh = fan(6)
        upper_half = TriangleLocator(mesh.positions, mesh.faces[:3])
        sliver = 0.99 * np.array([np.cos(np.pi / 6), np.sin(np.pi / 6)])
        assert upper_half.locate(sliver, clamp=True).face == 0
        with pytest.raises(PointLocationError) as info:
            upper_half.locate([0.0, -0.5], clamp=True)
        assert info.value.details["distance"] == pytest.approx(0.5)

    def test_far_point(self):
        """Test that points far outside are reported with their distance."""
        mesh = fan(6)
        locator = TriangleLocator(mesh.positions, mesh.faces)
        with pytest.raises(PointLocationError) as info:
            locator.locate([3.0, 0.0], clamp=True, operation="registration_map")
        assert info.value.details["distance"] == pytest.approx(2.0)
        assert info.value.operation == "registration_map"
        assert not locator.contains([3.0, 0.0])

    def test_locate_many(self):
        """Test vectorized location."""
        mesh = square_grid(2)
        faces, coords = TriangleLocator(mesh.positions, mesh.faces).locate_many([[0.1, 0.05], [0.9, 0.6]])
        assert faces.shape == (2,)
        np.testing.assert_allclose(coords.sum(axis=1), 1.0)
