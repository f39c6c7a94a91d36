"""Unit tests for discrete differential operators."""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from confmorph.misc.exceptions import AlreadyClosedError, DegenerateFaceError, VanishingConformalFactorError
from confmorph.models.parameterization import DiskParameterization
from confmorph.services.operators import (
    conformal_factor,
    cotangent_laplacian,
    double_cover,
    mean_curvature,
    mirror_index,
    nearest_interior,
    surface_signature,
)
from tests.fixtures.sample_meshes import ring_disk, sphere, square_grid


class TestCotangentLaplacian:
    """Assembly of the stiffness matrix."""

    def test_symmetric_with_zero_row_sums(self, hemi_mesh):
        """Test symmetry, zero row sums and positive semidefiniteness."""
        stiffness = cotangent_laplacian(hemi_mesh).toarray()
        np.testing.assert_allclose(stiffness, stiffness.T, atol=1e-12)
        np.testing.assert_allclose(stiffness.sum(axis=1), 0.0, atol=1e-12)
        assert np.linalg.eigvalsh(stiffness).min() > -1e-10

    def test_five_point_stencil_on_grid(self):
        """Test that a diagonal-split grid gives the five-point stencil."""
        stiffness = cotangent_laplacian(square_grid(4)).toarray()
        assert stiffness[6, 6] == pytest.approx(4.0)
        for neighbour in (1, 5, 7, 11):
            assert stiffness[6, neighbour] == pytest.approx(-1.0)
        for diagonal in (0, 12):
            assert stiffness[6, diagonal] == pytest.approx(0.0, abs=1e-12)

    def test_linear_precision(self, flat_disk):
        """Test that linear functions are harmonic at interior vertices of a planar mesh."""
        stiffness = cotangent_laplacian(flat_disk)
        linear = 3.0 * flat_disk.positions[:, 0] - 2.0 * flat_disk.positions[:, 1] + 1.0
        np.testing.assert_allclose((stiffness @ linear)[flat_disk.interior], 0.0, atol=1e-12)

    def test_parametric_embedding(self, hemi_param):
        """Test that a 2D embedding is accepted."""
        stiffness = cotangent_laplacian(hemi_param.mesh, hemi_param.image)
        assert stiffness.shape == (hemi_param.mesh.n_vertices,) * 2

    def test_degenerate_embedding(self):
        """Test that a collapsed embedding is rejected."""
        grid = square_grid(1)
        positions = np.array(grid.positions)
        positions[:, 0] = 0.0
        with pytest.raises(DegenerateFaceError):
            cotangent_laplacian(grid, positions)


class TestCurvature:
    """Conformal factor and mean curvature."""

    def test_conformal_factor_of_scaling(self, flat_disk):
        """Test that doubling the surface doubles lambda."""
        scaled = flat_disk.with_positions(2.0 * flat_disk.positions)
        np.testing.assert_allclose(conformal_factor(scaled, flat_disk.positions[:, :2]), 2.0)

    def test_flat_disk_has_zero_curvature(self, flat_param):
        """Test H = 0 on a planar disk."""
        np.testing.assert_allclose(mean_curvature(flat_param.mesh, flat_param), 0.0, atol=1e-10)

    def test_hemisphere_curvature(self, hemi_param):
        """Test H close to +1 on the lower hemisphere with its orientation normal."""
        h = mean_curvature(hemi_param.mesh, hemi_param)
        interior = hemi_param.mesh.interior
        assert (h[interior] > 0.0).all()
        assert np.median(np.abs(h[interior] - 1.0)) < 0.05

    def test_rigid_motion_invariance(self, hemi_param):
        """Test that lambda and interior H do not change under a rotation plus translation."""
        mesh = hemi_param.mesh
        rotation = Rotation.from_euler("zyx", [0.3, -0.5, 1.1]).as_matrix()
        moved = mesh.with_positions(mesh.positions @ rotation.T + [0.5, -2.0, 3.0])
        np.testing.assert_allclose(conformal_factor(moved, hemi_param.image), conformal_factor(mesh, hemi_param.image))
        interior = mesh.interior
        np.testing.assert_allclose(
            mean_curvature(moved, hemi_param)[interior], mean_curvature(mesh, hemi_param)[interior], atol=1e-9
        )

    def test_boundary_copies_nearest_interior(self, hemi_param):
        """Test that boundary vertices take the value of their nearest interior vertex."""
        mesh = hemi_param.mesh
        h = mean_curvature(mesh, hemi_param)
        nearest = nearest_interior(mesh)
        assert not mesh.boundary_mask[nearest[mesh.boundary]].any()
        np.testing.assert_array_equal(h[mesh.boundary], h[nearest[mesh.boundary]])
        np.testing.assert_array_equal(nearest[mesh.interior], mesh.interior)

    def test_vanishing_factor(self, flat_param):
        """Test that a zero conformal factor at an interior vertex is rejected."""
        lam = np.array(flat_param.lam)
        lam[0] = 0.0
        broken = DiskParameterization(flat_param.mesh, flat_param.image, lam)
        with pytest.raises(VanishingConformalFactorError) as info:
            mean_curvature(flat_param.mesh, broken)
        assert info.value.details["vertex"] == 0

    def test_signature_carries_boundary_and_colors(self, flat_disk):
        """Test the surface signature of a coloured disk."""
        colors = np.full((flat_disk.n_vertices, 3), 0.5)
        mesh = flat_disk.with_positions(flat_disk.positions, colors)
        param = DiskParameterization(mesh, mesh.positions[:, :2], np.ones(mesh.n_vertices))
        signature = surface_signature(mesh, param)
        np.testing.assert_array_equal(signature.boundary_positions, mesh.positions[mesh.boundary])
        np.testing.assert_array_equal(signature.colors, colors)
        assert signature.n_vertices == mesh.n_vertices


class TestDoubleCover:
    """Gluing a disk to its mirror copy."""

    def test_closed_sphere_topology(self):
        """Test vertex count and Euler characteristic of the double cover."""
        disk = ring_disk(3)
        closed = double_cover(disk)
        assert closed.is_closed
        assert closed.euler() == 2
        assert closed.n_vertices == 2 * disk.n_vertices - len(disk.boundary)

    def test_mirror_shares_boundary(self):
        """Test that boundary vertices map to themselves."""
        disk = ring_disk(3)
        mirror = mirror_index(disk)
        np.testing.assert_array_equal(mirror[disk.boundary], disk.boundary)
        assert (mirror[disk.interior] >= disk.n_vertices).all()

    def test_already_closed(self):
        """Test that a closed mesh cannot be double covered."""
        with pytest.raises(AlreadyClosedError):
            double_cover(sphere(1))
