import math

import numpy as np
import pytest

from steklovsvd import refine
from steklovsvd.fem import (
    BoundaryField,
    InteriorField,
    dtn_apply,
    green_identity_residual,
    harmonic_extension,
    normal_flux,
    operators,
    solve_dirichlet_poisson,
    t_apply,
    trace,
)


class TestFields:
    def test_interior_norm_positive_definite(self, disk_coarse):
        rng = np.random.default_rng(0)
        f = InteriorField(disk_coarse, rng.standard_normal(disk_coarse.vertices.shape[0]))
        assert f.norm_l2() > 0
        assert InteriorField.zero(disk_coarse).norm_l2() == 0.0

    def test_boundary_norm_conventions(self, disk_coarse):
        g = BoundaryField.constant(disk_coarse, 2.0)
        length = disk_coarse.boundary_length
        assert g.norm_dsigma() == pytest.approx(2.0 * math.sqrt(length), rel=1e-13)
        assert g.norm_normalized() == pytest.approx(2.0, rel=1e-13)

    def test_wrong_length_rejected(self, disk_coarse):
        with pytest.raises(ValueError):
            InteriorField(disk_coarse, np.zeros(3))
        with pytest.raises(ValueError):
            BoundaryField(disk_coarse, np.zeros(3))

    def test_operator_properties(self, disk_coarse):
        ops = operators(disk_coarse)
        a = ops.stiffness
        m = ops.mass
        assert abs(a - a.T).max() < 1e-14
        assert abs(m - m.T).max() < 1e-14
        # stiffness kernel: constants
        assert np.max(np.abs(a @ np.ones(a.shape[0]))) < 1e-12


class TestDirichletSolve:
    def test_linear_data_reproduced_exactly(self, disk_coarse):
        g = BoundaryField.from_function(disk_coarse, lambda x, y: 2 * x - 3 * y + 1)
        u = solve_dirichlet_poisson(disk_coarse, None, g)
        exact = 2 * disk_coarse.vertices[:, 0] - 3 * disk_coarse.vertices[:, 1] + 1
        assert np.max(np.abs(u.values - exact)) < 1e-10

    def test_zero_data_gives_zero(self, disk_coarse):
        u = solve_dirichlet_poisson(disk_coarse, None, None)
        assert np.max(np.abs(u.values)) == 0.0

    def test_manufactured_solution_second_order(self, disk_coarse):
        # lap(r^2 - 1) = 4 with zero trace on the unit disk.
        def max_err(mesh):
            u = solve_dirichlet_poisson(mesh, InteriorField.constant(mesh, 4.0), None)
            exact = mesh.vertices[:, 0] ** 2 + mesh.vertices[:, 1] ** 2 - 1
            return np.max(np.abs(u.values - exact))

        coarse = max_err(disk_coarse)
        fine = max_err(refine(disk_coarse))
        assert coarse < 2e-2
        assert coarse / fine > 3.0  # O(h^2) up to boundary-polygon effects


class TestHarmonicExtension:
    def test_constants_extend_exactly(self, disk_coarse):
        u = harmonic_extension(disk_coarse, BoundaryField.constant(disk_coarse, 7.25))
        assert np.max(np.abs(u.values - 7.25)) < 1e-10

    def test_cos_theta_extends_to_r_cos_theta(self, disk_mid):
        g = BoundaryField.from_function(disk_mid, lambda x, y: x / np.hypot(x, y))
        u = harmonic_extension(disk_mid, g)
        assert np.max(np.abs(u.values - disk_mid.vertices[:, 0])) < 1e-10

    def test_linearity_machine_precision(self, disk_coarse):
        rng = np.random.default_rng(3)
        nb = disk_coarse.boundary_nodes.size
        g1 = BoundaryField(disk_coarse, rng.standard_normal(nb))
        g2 = BoundaryField(disk_coarse, rng.standard_normal(nb))
        alpha = 0.731
        lhs = harmonic_extension(
            disk_coarse, BoundaryField(disk_coarse, alpha * g1.values + g2.values)
        )
        rhs = alpha * harmonic_extension(disk_coarse, g1).values + harmonic_extension(
            disk_coarse, g2
        ).values
        assert np.max(np.abs(lhs.values - rhs)) < 1e-12


class TestNormalFlux:
    def test_radial_manufactured_flux(self, disk_mid):
        f = InteriorField.constant(disk_mid, 4.0)
        u = solve_dirichlet_poisson(disk_mid, f, None)
        d = normal_flux(disk_mid, u, f)
        # D_nu(r^2 - 1) = 2 on the unit circle
        assert np.max(np.abs(d.values - 2.0)) < 0.03
        fine = refine(disk_mid)
        f2 = InteriorField.constant(fine, 4.0)
        d2 = normal_flux(fine, solve_dirichlet_poisson(fine, f2, None), f2)
        assert np.max(np.abs(d2.values - 2.0)) < np.max(np.abs(d.values - 2.0))

    def test_linear_field_flux_is_normal_average(self, disk_coarse):
        mesh = disk_coarse
        u = InteriorField(mesh, mesh.vertices[:, 0].copy())
        d = normal_flux(mesh, u, None)
        expected = np.zeros(mesh.vertices.shape[0])
        np.add.at(expected, mesh.boundary_edges[:, 0], 0.5 * mesh.edge_weights * mesh.normals[:, 0])
        np.add.at(expected, mesh.boundary_edges[:, 1], 0.5 * mesh.edge_weights * mesh.normals[:, 0])
        expected = expected[mesh.boundary_nodes] / mesh.boundary_weights
        assert np.max(np.abs(d.values - expected)) < 1e-12

    def test_constant_field_has_zero_flux(self, disk_coarse):
        d = normal_flux(disk_coarse, InteriorField.constant(disk_coarse, 5.0), None)
        assert np.max(np.abs(d.values)) < 1e-12


class TestDtn:
    def test_constant_maps_to_zero(self, disk_coarse):
        d = dtn_apply(disk_coarse, BoundaryField.constant(disk_coarse, 1.0))
        assert np.max(np.abs(d.values)) < 1e-11

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_disk_modes(self, disk_mid, k):
        # Dirichlet-to-Neumann of cos(k theta) is k cos(k theta) on the unit circle.
        g = BoundaryField.from_function(disk_mid, lambda x, y: np.cos(k * np.arctan2(y, x)))
        d = dtn_apply(disk_mid, g)
        rel = d.values - k * g.values
        assert np.linalg.norm(rel) / np.linalg.norm(k * g.values) < 5e-3

    def test_symmetry(self, disk_coarse):
        rng = np.random.default_rng(5)
        nb = disk_coarse.boundary_nodes.size
        g1 = BoundaryField(disk_coarse, rng.standard_normal(nb))
        g2 = BoundaryField(disk_coarse, rng.standard_normal(nb))
        lhs = dtn_apply(disk_coarse, g1).inner_dsigma(g2)
        rhs = g1.inner_dsigma(dtn_apply(disk_coarse, g2))
        assert lhs == pytest.approx(rhs, abs=1e-10 * max(abs(lhs), 1.0))


class TestTApply:
    def test_constant_gives_half_on_unit_disk(self, disk_mid):
        # b = (r^2 - 1) / 4 solves lap b = 1 with zero trace; D_nu b = 1/2.
        out = t_apply(disk_mid, BoundaryField.constant(disk_mid, 1.0))
        assert np.max(np.abs(out.values - 0.5)) < 1e-2
        assert abs(out.inner_normalized(BoundaryField.constant(disk_mid, 1.0)) - 0.5) < 1e-3

    @pytest.mark.parametrize("k", [1, 2])
    def test_disk_modes(self, disk_mid, k):
        g = BoundaryField.from_function(disk_mid, lambda x, y: np.cos(k * np.arctan2(y, x)))
        out = t_apply(disk_mid, g)
        target = g.values / (2 * k + 2)
        assert np.linalg.norm(out.values - target) / np.linalg.norm(target) < 2e-2

    def test_linearity(self, disk_coarse):
        rng = np.random.default_rng(7)
        g = BoundaryField(disk_coarse, rng.standard_normal(disk_coarse.boundary_nodes.size))
        scaled = t_apply(disk_coarse, BoundaryField(disk_coarse, 2.5 * g.values))
        assert np.max(np.abs(scaled.values - 2.5 * t_apply(disk_coarse, g).values)) < 1e-12


class TestGreenIdentity:
    def test_zero_trace_pair_both_sides_vanish(self, disk_mid):
        # u ~ r^2 - 1 and v ~ (1 - r^2)^2 both have zero trace; every term
        # of the identity vanishes up to discretization.
        fu = InteriorField.constant(disk_mid, 4.0)
        fv = InteriorField.from_function(
            disk_mid, lambda x, y: 16 * (x * x + y * y) - 8
        )
        u = solve_dirichlet_poisson(disk_mid, fu, None)
        v = solve_dirichlet_poisson(disk_mid, fv, None)
        res = green_identity_residual(disk_mid, u, v, fu, fv)
        assert res < 1e-8 * max(u.norm_l2() * v.norm_l2(), 1.0)
        ops = operators(disk_mid)
        volume = u.values @ (ops.mass @ fv.values) - v.values @ (ops.mass @ fu.values)
        assert abs(volume) < 5e-2

    def test_constant_against_radial_equals_four_pi(self, disk_mid):
        # integral of lap(r^2-1) = 4 |domain| ~ 4 pi; matches the flux term.
        one = InteriorField.constant(disk_mid, 1.0)
        fv = InteriorField.constant(disk_mid, 4.0)
        v = solve_dirichlet_poisson(disk_mid, fv, None)
        res = green_identity_residual(disk_mid, one, v, None, fv)
        assert res < 1e-10
        dv = normal_flux(disk_mid, v, fv)
        flux_side = disk_mid.boundary_length * dv.inner_normalized(trace(one))
        assert flux_side == pytest.approx(4 * disk_mid.area, rel=1e-12)
        assert flux_side == pytest.approx(4 * math.pi, rel=1e-3)

    def test_antisymmetry_u_equals_v(self, disk_coarse):
        f = InteriorField.from_function(disk_coarse, lambda x, y: x + y)
        u = solve_dirichlet_poisson(disk_coarse, f, None)
        assert green_identity_residual(disk_coarse, u, u, f, f) < 1e-12
