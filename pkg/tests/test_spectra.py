import math

import numpy as np
import pytest
import scipy.linalg as sla

from steklovsvd import refine, transform
from steklovsvd.analytic_disk import bessel_j_zero
from steklovsvd.errors import CapacityError, TruncationWarning
from steklovsvd.fem import BoundaryField, InteriorField, dtn_apply, operators, t_apply, trace
from steklovsvd.spectra import (
    basis_from_json_dict,
    basis_to_json_dict,
    dbs_eigensolve,
    dirichlet_laplacian_eigensolve,
    harmonic_steklov_eigensolve,
    hassell_tao_check,
    normal_derivative_series,
    trace_sobolev_norm,
)


def dense_t_matrix(mesh):
    """Brute-force assembly of the flux-composition operator, column by column."""
    nb = mesh.boundary_nodes.size
    cols = []
    for j in range(nb):
        e = np.zeros(nb)
        e[j] = 1.0
        cols.append(t_apply(mesh, BoundaryField(mesh, e)).values)
    return np.column_stack(cols)


class TestDbsEigensolve:
    def test_disk_spectrum_against_separation_of_variables(self, disk_mid_basis):
        # Radial mode gives q = 2; angular modes give q = 2k + 2, twice each.
        expected = [2, 4, 4, 6, 6, 8, 8, 10, 10]
        q = disk_mid_basis.q[:9]
        assert np.max(np.abs(q - expected) / np.array(expected)) < 0.02

    def test_q_positive_sorted(self, disk_mid_basis):
        q = disk_mid_basis.q
        assert q.min() > 0
        assert np.all(np.diff(q) >= -1e-12)

    def test_eigenfield_normalizations(self, disk_mid_basis):
        basis = disk_mid_basis
        mesh = basis.mesh
        ops = operators(mesh)
        gram_h = basis.h_matrix.T @ (ops.mass @ basis.h_matrix)
        assert np.max(np.abs(gram_h - np.eye(basis.rank))) < 1e-8
        gram_w = (
            basis.w_matrix.T @ (basis.w_matrix * mesh.boundary_weights[:, None])
        ) / mesh.boundary_length
        assert np.max(np.abs(gram_w - np.eye(basis.rank))) < 1e-8
        # zero trace exactly
        assert np.max(np.abs(basis.b_matrix[mesh.boundary_nodes])) == 0.0

    def test_trace_flux_coupling_identity(self, disk_mid_basis):
        basis = disk_mid_basis
        mesh = basis.mesh
        for j, pair in enumerate(basis.pairs):
            diff = trace(pair.h).values - math.sqrt(basis.q[j] / mesh.boundary_length) * pair.w.values
            assert BoundaryField(mesh, diff).norm_normalized() < 1e-6

    def test_flux_energy_is_reciprocal_eigenvalue(self, disk_mid_basis):
        for j, pair in enumerate(disk_mid_basis.pairs):
            assert pair.flux.inner_dsigma(pair.flux) * disk_mid_basis.q[j] == pytest.approx(
                1.0, abs=1e-6
            )

    def test_radial_mode_fields_match_closed_form(self, disk_mid_basis):
        basis = disk_mid_basis
        mesh = basis.mesh
        assert np.max(np.abs(basis.w_matrix[:, 0] - 1.0)) < 2e-2
        assert np.max(np.abs(basis.h_matrix[:, 0] - 1 / math.sqrt(math.pi))) < 1e-2
        exact_b = (mesh.vertices[:, 0] ** 2 + mesh.vertices[:, 1] ** 2 - 1) / (
            4 * math.sqrt(math.pi)
        )
        assert np.max(np.abs(basis.b_matrix[:, 0] - exact_b)) < 1e-2

    def test_capacity_errors(self, disk_coarse):
        nb = disk_coarse.boundary_nodes.size
        with pytest.raises(CapacityError):
            dbs_eigensolve(disk_coarse, nb)
        with pytest.raises(CapacityError):
            dbs_eigensolve(disk_coarse, 0)

    def test_square_matches_dense_operator_oracle(self, square_coarse):
        basis = dbs_eigensolve(square_coarse, 5)
        t_mat = dense_t_matrix(square_coarse)
        w = square_coarse.boundary_weights
        sym = np.sqrt(w)[:, None] * t_mat / np.sqrt(w)[None, :]
        beta = np.sort(sla.eigvalsh(0.5 * (sym + sym.T)))[::-1]
        assert basis.q[0] == pytest.approx(1.0 / beta[0], rel=1e-3)
        assert np.allclose(basis.q[:5], 1.0 / beta[:5], rtol=1e-6)

    def test_lanczos_agrees_with_dense(self, disk_coarse):
        dense = dbs_eigensolve(disk_coarse, 6, method="dense")
        lanczos = dbs_eigensolve(disk_coarse, 6, method="lanczos")
        assert np.max(np.abs(dense.q - lanczos.q) / dense.q) < 1e-8

    def test_rigid_motion_invariance(self, disk_coarse):
        base = dbs_eigensolve(disk_coarse, 5).q
        moved = transform(disk_coarse, rotation=1.1, offset=(4.0, -2.5))
        assert np.max(np.abs(dbs_eigensolve(moved, 5).q - base) / base) < 1e-10

    def test_scaling_law(self, disk_coarse):
        base = dbs_eigensolve(disk_coarse, 5).q
        scaled = dbs_eigensolve(transform(disk_coarse, scale=2.0), 5).q
        assert np.max(np.abs(2.0 * scaled - base) / base) < 1e-10

    def test_refinement_one_sided_convergence(self, square_coarse, disk_coarse):
        # Empirically the discrete eigenvalues converge monotonically, but
        # the side depends on the domain: on the disk the boundary polygon
        # grows under refinement and q ~ 1/R decreases, while on a fixed
        # polygon the discretization approaches the limit from below.
        coarse_q = dbs_eigensolve(square_coarse, 5).q
        fine_q = dbs_eigensolve(refine(square_coarse), 5).q
        assert np.all(fine_q >= coarse_q - 1e-6 * np.abs(coarse_q))
        coarse_q = dbs_eigensolve(disk_coarse, 5).q
        fine_q = dbs_eigensolve(refine(disk_coarse), 5).q
        assert np.all(coarse_q >= fine_q - 1e-6 * np.abs(fine_q))

    def test_disk_multiplicity_pairs(self, disk_mid_basis):
        q = disk_mid_basis.q
        for lo in (1, 3, 5):
            assert abs(q[lo + 1] - q[lo]) <= 1e-3 * q[lo]


class TestHarmonicSteklov:
    def test_disk_spectrum(self, disk_mid):
        pairs = harmonic_steklov_eigensolve(disk_mid, 5)
        delta = np.array([p.delta for p in pairs])
        assert np.max(np.abs(delta - [0, 1, 1, 2, 2])) < 0.02

    def test_constant_first_mode_on_any_domain(self, square_coarse):
        pairs = harmonic_steklov_eigensolve(square_coarse, 3)
        assert abs(pairs[0].delta) < 1e-10
        s0 = pairs[0].s.values
        assert np.max(np.abs(s0 - s0.mean())) < 1e-9 * max(abs(s0.mean()), 1.0)

    def test_traces_orthonormal(self, disk_mid):
        pairs = harmonic_steklov_eigensolve(disk_mid, 6)
        gram = np.array(
            [[trace(a.s).inner_normalized(trace(b.s)) for b in pairs] for a in pairs]
        )
        assert np.max(np.abs(gram - np.eye(6))) < 1e-10

    def test_square_against_dense_dtn_oracle(self, square_coarse):
        pairs = harmonic_steklov_eigensolve(square_coarse, 3)
        nb = square_coarse.boundary_nodes.size
        cols = []
        for j in range(nb):
            e = np.zeros(nb)
            e[j] = 1.0
            cols.append(dtn_apply(square_coarse, BoundaryField(square_coarse, e)).values)
        dtn = np.column_stack(cols)
        w = square_coarse.boundary_weights
        sym = np.sqrt(w)[:, None] * dtn / np.sqrt(w)[None, :]
        delta = np.sort(sla.eigvalsh(0.5 * (sym + sym.T))) * square_coarse.boundary_length
        # eigenvalues are reported against arclength measure, not normalized
        delta = delta / square_coarse.boundary_length
        assert pairs[1].delta == pytest.approx(delta[1], rel=1e-3)

    def test_capacity(self, disk_coarse):
        with pytest.raises(CapacityError):
            harmonic_steklov_eigensolve(disk_coarse, disk_coarse.boundary_nodes.size + 1)


class TestDirichletLaplacian:
    def test_disk_ground_state(self, disk_mid):
        pairs = dirichlet_laplacian_eigensolve(disk_mid, 1)
        assert pairs[0].lam == pytest.approx(bessel_j_zero(0, 1) ** 2, rel=0.01)

    def test_square_ground_state(self, square_mid):
        pairs = dirichlet_laplacian_eigensolve(square_mid, 1)
        assert pairs[0].lam == pytest.approx(2 * math.pi**2, rel=0.01)

    def test_orthonormal_eigenfields(self, disk_mid):
        pairs = dirichlet_laplacian_eigensolve(disk_mid, 6)
        gram = np.array([[a.e.inner(b.e) for b in pairs] for a in pairs])
        assert np.max(np.abs(gram - np.eye(6))) < 1e-8

    def test_capacity(self, disk_coarse):
        with pytest.raises(CapacityError):
            dirichlet_laplacian_eigensolve(disk_coarse, disk_coarse.interior_nodes.size + 1)


class TestNormalDerivativeSeries:
    def test_zero_coefficients_give_zero_field(self, disk_mid_basis):
        out = normal_derivative_series(np.zeros(5), 1.0, disk_mid_basis)
        assert np.max(np.abs(out.values)) == 0.0

    def test_radial_mode_rellich_identity(self, disk_mid, disk_mid_basis):
        pair = dirichlet_laplacian_eigensolve(disk_mid, 1)[0]
        coeffs = disk_mid_basis.interior_coeffs(pair.e)
        series = normal_derivative_series(coeffs, pair.lam, disk_mid_basis)
        energy = series.inner_dsigma(series)
        assert energy == pytest.approx(2 * pair.lam, rel=0.02)

    def test_series_matches_recovered_flux(self, disk_mid, disk_mid_basis):
        for pair in dirichlet_laplacian_eigensolve(disk_mid, 3):
            coeffs = disk_mid_basis.interior_coeffs(pair.e)
            series = normal_derivative_series(coeffs, pair.lam, disk_mid_basis)
            diff = BoundaryField(disk_mid, series.values - pair.flux.values)
            assert diff.norm_dsigma() / pair.flux.norm_dsigma() < 0.05

    def test_nonpositive_eigenvalue_rejected(self, disk_mid_basis):
        with pytest.raises(ValueError):
            normal_derivative_series(np.ones(3), -1.0, disk_mid_basis)


class TestHassellTao:
    def test_disk_reports(self, disk_mid, disk_mid_basis):
        for pair in dirichlet_laplacian_eigensolve(disk_mid, 5):
            report = hassell_tao_check(pair, disk_mid_basis)
            assert report.flux_sq == pytest.approx(2 * pair.lam, rel=0.02)
            assert report.ratio <= 1 + 1e-6
            assert report.bound_weak >= report.bound

    def test_unnormalized_field_rejected(self, disk_mid, disk_mid_basis):
        pair = dirichlet_laplacian_eigensolve(disk_mid, 1)[0]
        bad = type(pair)(pair.lam, InteriorField(disk_mid, 2 * pair.e.values), pair.flux)
        with pytest.raises(ValueError):
            hassell_tao_check(bad, disk_mid_basis)


class TestTraceSobolevNorm:
    def test_constant_is_one_for_every_order(self, disk_mid):
        pairs = harmonic_steklov_eigensolve(disk_mid, 8)
        g = trace(pairs[0].s)
        for s in (-1.0, -0.5, 0.0, 0.5, 1.0):
            assert trace_sobolev_norm(g, s, pairs) == pytest.approx(1.0, abs=1e-8)

    def test_single_mode_weight(self, disk_mid):
        # the unit-trace-norm mode of r cos(theta) has eigenvalue 1, so the
        # s-norm is 2**s (through the discretized eigenvalue exactly, and
        # through the analytic one up to discretization error)
        pairs = harmonic_steklov_eigensolve(disk_mid, 8)
        g = trace(pairs[1].s)
        for s in (-1.0, -0.25, 0.5, 1.0):
            norm = trace_sobolev_norm(g, s, pairs)
            assert norm == pytest.approx((1 + pairs[1].delta) ** s, rel=1e-8)
            assert norm == pytest.approx(2.0**s, rel=2e-3)

    def test_parseval_at_order_zero(self, disk_mid):
        pairs = harmonic_steklov_eigensolve(disk_mid, 10)
        rng = np.random.default_rng(2)
        g = BoundaryField(
            disk_mid,
            sum(c * trace(p.s).values for c, p in zip(rng.standard_normal(10), pairs)),
        )
        assert trace_sobolev_norm(g, 0.0, pairs) == pytest.approx(
            g.norm_normalized(), rel=1e-8
        )

    def test_order_out_of_range_rejected(self, disk_mid):
        pairs = harmonic_steklov_eigensolve(disk_mid, 3)
        with pytest.raises(ValueError):
            trace_sobolev_norm(trace(pairs[0].s), 1.5, pairs)

    def test_truncation_warning_for_rough_data(self, disk_mid):
        pairs = harmonic_steklov_eigensolve(disk_mid, 3)
        rng = np.random.default_rng(4)
        g = BoundaryField(disk_mid, rng.standard_normal(disk_mid.boundary_nodes.size))
        with pytest.warns(TruncationWarning):
            trace_sobolev_norm(g, 0.0, pairs)


class TestBasisSerialization:
    def test_roundtrip(self, disk_coarse):
        basis = dbs_eigensolve(disk_coarse, 4)
        data = basis_to_json_dict(basis, "disk;radius=1;h=0.1")
        assert list(data.keys()) == [
            "domain",
            "boundary_length",
            "M",
            "q",
            "b",
            "h",
            "w",
            "mesh_hash",
        ]
        back = basis_from_json_dict(data, disk_coarse)
        assert np.array_equal(back.q, basis.q)
        assert np.array_equal(back.h_matrix, basis.h_matrix)

    def test_wrong_mesh_rejected(self, disk_coarse, square_coarse):
        basis = dbs_eigensolve(disk_coarse, 3)
        data = basis_to_json_dict(basis, "disk")
        with pytest.raises(ValueError, match="hash"):
            basis_from_json_dict(data, square_coarse)
