import numpy as np
import pytest

from chsurf.errors import MeshError
from chsurf.mesh import (SurfaceMesh, check_mesh, evolve_mesh, icosphere,
                         mesh_quality)
from chsurf.presets import oscillating_ellipsoid, static_sphere


def triangle_area_sum(mesh):
    """Independent quadrature of the discrete area (cross-product formula)."""
    p = mesh.nodes[mesh.elements]
    return 0.5 * np.linalg.norm(
        np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1).sum()


class TestIcosphere:
    def test_level0_combinatorics(self, sphere):
        mesh = icosphere(0, 1.0, sphere)
        assert mesh.n_nodes == 12
        assert mesh.n_elements == 20

    @pytest.mark.parametrize("level", [0, 1, 2, 3])
    def test_node_count_formula(self, sphere, level):
        mesh = icosphere(level, 1.0, sphere)
        assert mesh.n_nodes == 10 * 4 ** level + 2
        assert mesh.n_elements == 20 * 4 ** level

    def test_level3_area(self, sphere):
        # area oracle: direct cross-product quadrature; the inscribed
        # triangulation undershoots 4 pi by ~0.48% at this resolution
        mesh = icosphere(3, 1.0, sphere)
        assert mesh.n_nodes == 642
        area = triangle_area_sum(mesh)
        assert area == pytest.approx(12.5064927, abs=1e-5)
        assert abs(area - 4 * np.pi) / (4 * np.pi) < 5.0e-3

    def test_level5_matches_reported_mesh_size(self, sphere):
        mesh = icosphere(5, 1.0, sphere)
        assert mesh.n_nodes == 10242

    def test_level_cap(self, sphere):
        with pytest.raises(MeshError):
            icosphere(9, 1.0, sphere)

    def test_nodes_on_surface(self, ellipsoid):
        mesh = icosphere(2, 1.0, ellipsoid, t0=0.15)
        assert np.abs(ellipsoid.d(mesh.nodes, 0.15)).max() <= 1e-10

    def test_radius_scaling(self):
        big = static_sphere(radius=5.0)
        mesh = icosphere(1, 5.0, big)
        np.testing.assert_allclose(np.linalg.norm(mesh.nodes, axis=1), 5.0,
                                   atol=1e-9)

    def test_outward_orientation(self, sphere):
        mesh = icosphere(2, 1.0, sphere)
        p = mesh.nodes[mesh.elements]
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        assert np.all(np.einsum("ij,ij->i", n, p.mean(axis=1)) > 0.0)


class TestEvolveMesh:
    def test_static_surface_unchanged(self, sphere):
        mesh = icosphere(2, 1.0, sphere)
        moved = evolve_mesh(mesh, sphere, 0.5, substeps=4)
        np.testing.assert_allclose(moved.nodes, mesh.nodes, atol=1e-12)
        assert moved.time == 0.5

    def test_axis_node_against_fine_rk4(self, ellipsoid):
        # oracle: the same integrator with 100x more substeps
        mesh = icosphere(1, 1.0, ellipsoid, t0=0.0)
        coarse = evolve_mesh(mesh, ellipsoid, 0.5, substeps=16)
        fine = evolve_mesh(mesh, ellipsoid, 0.5, substeps=1600)
        np.testing.assert_allclose(coarse.nodes, fine.nodes, atol=1e-8)
        # the node starting at (1,0,0) stays on the x1 axis, and at t=0.5
        # the axis point is back at sqrt(a(0.5)) = 1
        i = np.argmin(np.linalg.norm(mesh.nodes - [1.0, 0.0, 0.0], axis=1))
        np.testing.assert_allclose(coarse.nodes[i], [1.0, 0.0, 0.0], atol=1e-6)

    def test_periodic_motion_returns_nodes(self, ellipsoid):
        mesh = icosphere(2, 1.0, ellipsoid, t0=0.0)
        moved = evolve_mesh(mesh, ellipsoid, 1.0, substeps=100)
        assert np.abs(moved.nodes - mesh.nodes).max() <= 1e-6

    def test_nodes_stay_on_surface(self, ellipsoid):
        mesh = icosphere(2, 1.0, ellipsoid)
        moved = evolve_mesh(mesh, ellipsoid, 0.37, substeps=3)
        assert np.abs(ellipsoid.d(moved.nodes, 0.37)).max() <= 1e-10

    def test_connectivity_shared(self, ellipsoid):
        mesh = icosphere(2, 1.0, ellipsoid)
        moved = evolve_mesh(mesh, ellipsoid, 0.2)
        assert moved.elements is mesh.elements

    def test_split_evolution_consistency(self, ellipsoid):
        mesh = icosphere(2, 1.0, ellipsoid)
        direct = evolve_mesh(mesh, ellipsoid, 0.4, substeps=2)
        half = evolve_mesh(mesh, ellipsoid, 0.2, substeps=1)
        split = evolve_mesh(half, ellipsoid, 0.4, substeps=1)
        np.testing.assert_allclose(split.nodes, direct.nodes, atol=1e-8)

    def test_velocity_interpolant_set(self, ellipsoid):
        from chsurf.geometry import velocity
        mesh = icosphere(1, 1.0, ellipsoid)
        moved = evolve_mesh(mesh, ellipsoid, 0.3, substeps=2)
        np.testing.assert_allclose(moved.node_velocity,
                                   velocity(ellipsoid, moved.nodes, 0.3),
                                   atol=1e-14)

    def test_backwards_rejected(self, ellipsoid):
        mesh = icosphere(1, 1.0, ellipsoid, t0=0.5)
        with pytest.raises(MeshError):
            evolve_mesh(mesh, ellipsoid, 0.2)


class TestMeshQuality:
    def test_icosahedron_is_equilateral(self, sphere):
        report = mesh_quality(icosphere(0, 1.0, sphere))
        assert report.min_angle == pytest.approx(60.0, abs=1e-9)
        assert report.quasi_uniformity == pytest.approx(1.0, abs=1e-12)

    def test_level3_min_angle(self, sphere):
        # measured on the generated mesh; well above the 40 degree floor
        report = mesh_quality(icosphere(3, 1.0, sphere))
        assert report.min_angle >= 40.0

    def test_quasi_uniformity_stabilises(self, sphere):
        # measured: the ratio saturates towards ~1.195 with shrinking
        # increments, comfortably below the quasi-uniformity bound
        ratios = [mesh_quality(icosphere(level, 1.0, sphere)).quasi_uniformity
                  for level in range(1, 5)]
        increments = [abs(b - a) for a, b in zip(ratios, ratios[1:])]
        assert all(b <= a + 1e-9 for a, b in zip(increments, increments[1:]))
        assert all(r <= 1.25 for r in ratios)
        assert all(r <= 10.0 for r in ratios)


class TestMeshValidation:
    def test_open_mesh_rejected(self, sphere):
        mesh = icosphere(0, 1.0, sphere)
        broken = SurfaceMesh(nodes=mesh.nodes, elements=mesh.elements[:-1],
                             time=0.0, node_velocity=mesh.node_velocity)
        with pytest.raises(MeshError):
            check_mesh(broken)

    def test_degenerate_triangle_rejected(self, sphere):
        mesh = icosphere(0, 1.0, sphere)
        bad = mesh.elements.copy()
        bad[0, 1] = bad[0, 0]
        broken = SurfaceMesh(nodes=mesh.nodes, elements=bad, time=0.0,
                             node_velocity=mesh.node_velocity)
        with pytest.raises(MeshError):
            check_mesh(broken)

    def test_off_surface_nodes_rejected(self, sphere):
        mesh = icosphere(0, 1.0, sphere)
        shifted = SurfaceMesh(nodes=mesh.nodes * 1.01, elements=mesh.elements,
                              time=0.0, node_velocity=mesh.node_velocity)
        with pytest.raises(MeshError):
            check_mesh(shifted, sphere)
