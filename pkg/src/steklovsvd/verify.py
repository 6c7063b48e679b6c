"""Invariant batteries behind the ``verify`` command.

Each check measures one invariant and records the measured against the
allowed value, so failures always name the violated property and both
numbers.  The batteries are grouped into suites mirroring the package
layout (mesh, solver, spectra, bergman, poisson).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bergman as bg
from . import poisson as ps
from .fem import (
    BoundaryField,
    InteriorField,
    harmonic_extension,
    green_identity_residual,
    normal_flux,
    operators,
    solve_dirichlet_poisson,
    t_apply,
    trace,
)
from .meshing import Mesh, refine, transform
from .spectra import (
    SpectralBasis,
    dbs_eigensolve,
    dirichlet_laplacian_eigensolve,
    harmonic_steklov_eigensolve,
    trace_sobolev_norm,
)

__all__ = ["CheckResult", "run_suites", "SUITE_NAMES"]

SUITE_NAMES = ("mesh", "solver", "spectra", "bergman", "poisson")


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    allowed: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name}: measured={self.measured:.6e} "
            f"allowed={self.allowed:.6e}"
        )


def _leq(name: str, measured: float, allowed: float) -> CheckResult:
    return CheckResult(name, float(measured), float(allowed), bool(measured <= allowed))


def _geq(name: str, measured: float, allowed: float) -> CheckResult:
    return CheckResult(name, float(measured), float(allowed), bool(measured >= allowed))


def _shoelace(mesh: Mesh) -> tuple[float, float]:
    area = 0.0
    length = 0.0
    for loop in mesh.boundary_loops:
        p = mesh.vertices[loop]
        q = mesh.vertices[np.roll(loop, -1)]
        area += 0.5 * float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))
        length += float(np.sum(np.hypot(*(q - p).T)))
    return area, length


def _mesh_suite(mesh: Mesh) -> list[CheckResult]:
    out = []
    area, length = _shoelace(mesh)
    out.append(_leq("mesh.area_quadrature_exact", abs(mesh.area - area), 1e-10 * max(area, 1.0)))
    out.append(
        _leq(
            "mesh.perimeter_quadrature_exact",
            abs(mesh.boundary_length - length),
            1e-10 * max(length, 1.0),
        )
    )
    mid = 0.5 * (
        mesh.vertices[mesh.boundary_edges[:, 0]] + mesh.vertices[mesh.boundary_edges[:, 1]]
    )
    centroid = mesh.vertices[mesh.triangles[mesh._edge_owner_triangle]].mean(axis=1)
    out.append(
        _geq(
            "mesh.normals_outward",
            float(np.min(np.einsum("ij,ij->i", mesh.normals, mid - centroid))),
            1e-300,
        )
    )
    fine = refine(mesh)
    out.append(
        _leq(
            "mesh.refine_quadruples_triangles",
            abs(fine.triangles.shape[0] - 4 * mesh.triangles.shape[0]),
            0.0,
        )
    )
    if mesh.geometry[0] == "disk":
        out.append(
            _geq(
                "mesh.refine_grows_disk_boundary",
                fine.boundary_length - mesh.boundary_length,
                0.0,
            )
        )
    else:
        out.append(
            _leq(
                "mesh.refine_halves_max_edge",
                abs(fine.max_edge_length - 0.5 * mesh.max_edge_length),
                1e-12 * mesh.max_edge_length,
            )
        )
    return out


def _solver_suite(mesh: Mesh, rng: np.random.Generator) -> list[CheckResult]:
    out = []
    g_lin = BoundaryField.from_function(mesh, lambda x, y: x)
    u = solve_dirichlet_poisson(mesh, None, g_lin)
    out.append(
        _leq(
            "solver.linear_solution_exact",
            float(np.max(np.abs(u.values - mesh.vertices[:, 0]))),
            1e-10,
        )
    )
    const = harmonic_extension(mesh, BoundaryField.constant(mesh, 3.5))
    out.append(
        _leq("solver.constant_extension_exact", float(np.max(np.abs(const.values - 3.5))), 1e-10)
    )
    # Flux of a linear field equals the length-weighted average of edge normals.
    d = normal_flux(mesh, InteriorField(mesh, mesh.vertices[:, 0].copy()), None)
    expected = np.zeros(mesh.vertices.shape[0])
    np.add.at(expected, mesh.boundary_edges[:, 0], 0.5 * mesh.edge_weights * mesh.normals[:, 0])
    np.add.at(expected, mesh.boundary_edges[:, 1], 0.5 * mesh.edge_weights * mesh.normals[:, 0])
    expected = expected[mesh.boundary_nodes] / mesh.boundary_weights
    out.append(
        _leq("solver.linear_flux_exact", float(np.max(np.abs(d.values - expected))), 1e-10)
    )
    zero = solve_dirichlet_poisson(mesh, None, None)
    out.append(_leq("solver.zero_data_zero_solution", float(np.max(np.abs(zero.values))), 0.0))

    nb = mesh.boundary_nodes.size
    sym = 0.0
    pos = 0.0
    for _ in range(10):
        g1 = BoundaryField(mesh, rng.standard_normal(nb))
        g2 = BoundaryField(mesh, rng.standard_normal(nb))
        t1, t2 = t_apply(mesh, g1), t_apply(mesh, g2)
        scale = g1.norm_dsigma() * g2.norm_dsigma()
        sym = max(sym, abs(t1.inner_dsigma(g2) - g1.inner_dsigma(t2)) / scale)
        pos = min(pos, t1.inner_dsigma(g1) / g1.inner_dsigma(g1))
    out.append(_leq("solver.t_apply_symmetric", sym, 1e-10))
    out.append(_geq("solver.t_apply_positive", pos, -1e-12))

    fu = InteriorField.from_function(mesh, lambda x, y: 1.0 + 0.0 * x)
    fv = InteriorField.from_function(mesh, lambda x, y: x * y)
    uu = solve_dirichlet_poisson(mesh, fu, BoundaryField.from_function(mesh, lambda x, y: y))
    vv = solve_dirichlet_poisson(mesh, fv, None)
    scale = max(uu.norm_l2() * vv.norm_l2(), 1.0)
    out.append(
        _leq(
            "solver.green_identity_residual",
            green_identity_residual(mesh, uu, vv, fu, fv),
            1e-8 * scale,
        )
    )
    return out


def _spectra_suite(
    mesh: Mesh, basis: SpectralBasis, rng: np.random.Generator
) -> list[CheckResult]:
    out = []
    ops = operators(mesh)
    q = basis.q
    out.append(_geq("spectra.q_strictly_positive", float(q.min()), 1e-300))
    out.append(_geq("spectra.q_sorted_ascending", float(np.min(np.diff(q))) if q.size > 1 else 0.0, -1e-12))

    gram_h = basis.h_matrix.T @ (ops.mass @ basis.h_matrix)
    out.append(
        _leq(
            "spectra.h_gram_identity",
            float(np.max(np.abs(gram_h - np.eye(q.size)))),
            1e-8,
        )
    )
    ww = basis.w_matrix * ops.boundary_weights[:, None]
    gram_w = (basis.w_matrix.T @ ww) / mesh.boundary_length
    out.append(
        _leq(
            "spectra.w_gram_identity",
            float(np.max(np.abs(gram_w - np.eye(q.size)))),
            1e-8,
        )
    )
    worst = 0.0
    for j, pair in enumerate(basis.pairs):
        lhs = trace(pair.h)
        rhs = np.sqrt(q[j] / mesh.boundary_length) * pair.w.values
        worst = max(
            worst, BoundaryField(mesh, lhs.values - rhs).norm_normalized()
        )
    out.append(_leq("spectra.trace_flux_identity", worst, 1e-6))
    worst = 0.0
    for j, pair in enumerate(basis.pairs):
        m_bb = pair.flux.inner_dsigma(pair.flux)
        worst = max(worst, abs(m_bb * q[j] - 1.0))
    out.append(_leq("spectra.flux_energy_reciprocal", worst, 1e-6))

    lam1 = dirichlet_laplacian_eigensolve(mesh, 1)[0].lam
    n = mesh.vertices.shape[0]
    flux_ratio = 0.0
    norm_ratio = 0.0
    for _ in range(50):
        f = InteriorField(mesh, rng.standard_normal(n))
        u = solve_dirichlet_poisson(mesh, f, None)
        d = normal_flux(mesh, u, f)
        f_sq = f.inner(f)
        flux_ratio = max(flux_ratio, d.inner_dsigma(d) * float(q[0]) / f_sq)
        energy = float(u.values @ (ops.stiffness @ u.values)) + f_sq
        norm_ratio = max(norm_ratio, energy / ((1.0 + 1.0 / lam1) * f_sq))
    out.append(_leq("spectra.flux_continuity_bound", flux_ratio, 1.0 + 1e-8))
    out.append(_leq("spectra.laplacian_norm_equivalence", norm_ratio, 1.0 + 1e-8))

    steklov = harmonic_steklov_eigensolve(mesh, min(8, mesh.boundary_nodes.size))
    out.append(_leq("spectra.steklov_first_eigenvalue_zero", abs(steklov[0].delta), 1e-8))
    s0 = steklov[0].s.values
    out.append(
        _leq(
            "spectra.steklov_first_mode_constant",
            float(np.max(np.abs(s0 - s0.mean()))),
            1e-8 * max(abs(s0.mean()), 1.0),
        )
    )
    coeffs = rng.standard_normal(len(steklov))
    g = BoundaryField(
        mesh, sum(c * trace(p.s).values for c, p in zip(coeffs, steklov))
    )
    parseval = trace_sobolev_norm(g, 0.0, steklov)
    out.append(
        _leq(
            "spectra.trace_norm_parseval",
            abs(parseval - g.norm_normalized()) / g.norm_normalized(),
            1e-8,
        )
    )

    moved = transform(mesh, rotation=0.7, offset=(0.31, -1.25))
    q_moved = dbs_eigensolve(moved, min(5, basis.rank)).q
    out.append(
        _leq(
            "spectra.rigid_motion_invariance",
            float(np.max(np.abs(q_moved - q[: q_moved.size]) / q[: q_moved.size])),
            1e-10,
        )
    )
    scaled = transform(mesh, scale=2.0)
    q_scaled = dbs_eigensolve(scaled, min(5, basis.rank)).q
    out.append(
        _leq(
            "spectra.scaling_law",
            float(np.max(np.abs(2.0 * q_scaled - q[: q_scaled.size]) / q[: q_scaled.size])),
            1e-10,
        )
    )
    if mesh.geometry[0] == "disk" and basis.rank >= 3:
        out.append(
            _leq(
                "spectra.disk_multiplicity_pairs",
                abs(q[2] - q[1]),
                1e-3 * q[1],
            )
        )
    return out


def _bergman_suite(
    mesh: Mesh, basis: SpectralBasis, rng: np.random.Generator
) -> list[CheckResult]:
    out = []
    n = mesh.vertices.shape[0]
    f = InteriorField(mesh, rng.standard_normal(n))
    pf = bg.bergman_project(f, basis)
    ppf = bg.bergman_project(pf, basis)
    fnorm = f.norm_l2()
    out.append(
        _leq(
            "bergman.projection_idempotent",
            InteriorField(mesh, ppf.values - pf.values).norm_l2() / fnorm,
            1e-10,
        )
    )
    coeffs = basis.interior_coeffs(InteriorField(mesh, f.values - pf.values))
    out.append(_leq("bergman.residual_orthogonal", float(np.max(np.abs(coeffs))) / fnorm, 1e-8))
    res = InteriorField(mesh, f.values - pf.values)
    pyth = abs(fnorm**2 - pf.norm_l2() ** 2 - res.norm_l2() ** 2) / fnorm**2
    out.append(_leq("bergman.pythagoras", pyth, 1e-10))
    out.append(_leq("bergman.contraction", pf.norm_l2() / fnorm, 1.0 + 1e-12))

    margin = mesh.max_edge_length
    area, _ = _shoelace(mesh)
    centroid = mesh.vertices.mean(axis=0)
    radius = 0.4 * math.sqrt(area / math.pi)
    pts = [
        centroid + radius * np.array([math.cos(t), math.sin(t)])
        for t in np.linspace(0.0, 2.0 * math.pi, 10, endpoint=False)
    ]
    kernel = bg.TruncatedKernel(basis, margin=margin)
    eigs = np.linalg.eigvalsh(kernel.gram(pts))
    out.append(_geq("bergman.kernel_gram_psd", float(eigs.min()), -1e-8))

    pairs = dirichlet_laplacian_eigensolve(mesh, 5)
    worst = min(bg.bergman_project(p.e, basis).norm_l2() for p in pairs)
    out.append(_geq("bergman.projection_separates_dirichlet_modes", worst, 0.1))
    return out


def _poisson_suite(
    mesh: Mesh, basis: SpectralBasis, rng: np.random.Generator
) -> list[CheckResult]:
    out = []
    svd = ps.PoissonSvd.from_basis(basis)
    worst = 0.0
    for j in range(min(10, svd.rank)):
        ext = ps.extend_harmonic_svd(BoundaryField(mesh, basis.w_matrix[:, j]), svd)
        target = np.sqrt(svd.boundary_length / basis.q[j]) * basis.h_matrix[:, j]
        worst = max(worst, InteriorField(mesh, ext.values - target).norm_l2())
    out.append(_leq("poisson.svd_maps_right_to_left", worst, 1e-8))
    sv = svd.singular_values
    out.append(_leq("poisson.singular_values_nonincreasing", float(np.max(np.diff(sv))), 1e-12))
    out.append(_leq("poisson.singular_values_decay", float(sv[-1]), 0.5 * float(sv[0])))

    nb = mesh.boundary_nodes.size
    m = min(10, svd.rank - 1)
    worst_ratio = 0.0
    for _ in range(20):
        g = BoundaryField(mesh, rng.standard_normal(nb))
        worst_ratio = max(worst_ratio, ps.truncation_error_report(g, svd, m).ratio)
    out.append(_leq("poisson.truncation_bound", worst_ratio, 1.0 + 1e-6))
    tail = ps.truncation_error_report(BoundaryField(mesh, basis.w_matrix[:, m]), svd, m)
    out.append(_leq("poisson.single_tail_mode_sharp", abs(tail.ratio - 1.0), 1e-6))

    g = BoundaryField(mesh, rng.standard_normal(nb))
    full = harmonic_extension(mesh, g)
    errors = []
    for mm in range(1, min(svd.rank, 12) + 1):
        trunc = ps.extend_harmonic_svd(g, svd, mm)
        errors.append(InteriorField(mesh, full.values - trunc.values).norm_l2())
    out.append(
        _leq(
            "poisson.truncation_error_monotone",
            float(np.max(np.diff(errors))),
            1e-12 * max(errors[0], 1.0),
        )
    )
    return out


def run_suites(
    mesh: Mesh, suites=("all",), n_modes: int = 40, seed: int = 0
) -> list[CheckResult]:
    """Run the named invariant suites on ``mesh`` and return all results."""
    chosen = set(SUITE_NAMES) if "all" in suites else set(suites)
    unknown = chosen - set(SUITE_NAMES)
    if unknown:
        raise ValueError(f"unknown suite(s): {sorted(unknown)}")
    rng = np.random.default_rng(seed)
    results = []
    if "mesh" in chosen:
        results.extend(_mesh_suite(mesh))
    if "solver" in chosen:
        results.extend(_solver_suite(mesh, rng))
    basis = None
    if chosen & {"spectra", "bergman", "poisson"}:
        n_modes = min(n_modes, mesh.boundary_nodes.size - 1)
        basis = dbs_eigensolve(mesh, n_modes)
    if "spectra" in chosen:
        results.extend(_spectra_suite(mesh, basis, rng))
    if "bergman" in chosen:
        results.extend(_bergman_suite(mesh, basis, rng))
    if "poisson" in chosen:
        results.extend(_poisson_suite(mesh, basis, rng))
    return results
