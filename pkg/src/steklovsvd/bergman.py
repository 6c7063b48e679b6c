"""Harmonic Bergman constructions on top of a spectral basis.

The Laplacians ``h_j`` of the biharmonic Steklov eigenfields form an
L2-orthonormal set of harmonic functions; truncating at rank ``M`` gives

* the harmonic projection ``P_H f = sum_j <f, h_j> h_j``,
* the reproducing kernel ``R_M(x, y) = sum_j h_j(x) h_j(y)``, which acts
  as a delta function on harmonic functions,
* the biharmonic potential splitting ``f = P_H f + lap(psi)`` with ``psi``
  of zero trace and (up to truncation) zero flux,
* the minimal-energy biharmonic extension of Neumann boundary data, and
* the harmonic trace series mapping interior coefficients to boundary data.

Kernel point evaluation uses barycentric interpolation and is only
accurate away from the boundary; evaluation points must keep a configured
margin (one element diameter by default) from the boundary.
"""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import OutsideDomainError, TruncationWarning
from .fem import (
    BoundaryField,
    InteriorField,
    interpolate_values,
    normal_flux,
    solve_dirichlet_poisson,
)
from .spectra import SpectralBasis

__all__ = [
    "bergman_project",
    "TruncatedKernel",
    "reproducing_kernel_eval",
    "BergmanDecomposition",
    "biharmonic_potential",
    "neumann_biharmonic_extension",
    "harmonic_trace",
    "kernel_grid_csv",
]


def _resolve_rank(basis: SpectralBasis, m) -> int:
    m = basis.rank if m is None else int(m)
    if m < 1 or m > basis.rank:
        raise ValueError(f"truncation rank must lie in [1, {basis.rank}], got {m}")
    return m


def bergman_project(f: InteriorField, basis: SpectralBasis, m: int | None = None) -> InteriorField:
    """Rank-``m`` harmonic projection of ``f`` (idempotent on its range)."""
    m = _resolve_rank(basis, m)
    coeffs = basis.interior_coeffs(f)[:m]
    return InteriorField(basis.mesh, basis.h_matrix[:, :m] @ coeffs)


class TruncatedKernel:
    """Rank-``m`` reproducing kernel of the harmonic Bergman space.

    Symmetric and positive semidefinite by construction.  Evaluation
    points must be at least ``margin`` inside the boundary; the default
    margin is one element diameter.  Point interpolations are cached;
    the cache is only ever appended to, so concurrent readers are safe.
    """

    def __init__(self, basis: SpectralBasis, m: int | None = None, margin: float | None = None):
        self.basis = basis
        self.m = _resolve_rank(basis, m)
        self.margin = basis.mesh.max_edge_length if margin is None else float(margin)
        self._cache: dict[tuple[float, float], np.ndarray] = {}

    def _mode_values(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        key = (float(point[0]), float(point[1]))
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        mesh = self.basis.mesh
        if mesh.distance_to_boundary(point) < self.margin:
            raise OutsideDomainError(
                f"point {key} is within the boundary margin {self.margin}"
            )
        vals = interpolate_values(mesh, self.basis.h_matrix[:, : self.m], point)[0]
        self._cache[key] = vals
        return vals

    def eval(self, x, y) -> float:
        return float(self._mode_values(x) @ self._mode_values(y))

    def gram(self, points) -> np.ndarray:
        """Kernel Gram matrix of a point set (positive semidefinite)."""
        v = np.stack([self._mode_values(p) for p in points])
        return v @ v.T

    def values_on_vertices(self, x) -> np.ndarray:
        """Raw truncated series ``R_M(x, .)`` sampled at every mesh vertex."""
        hx = self._mode_values(x)
        return self.basis.h_matrix[:, : self.m] @ hx


def reproducing_kernel_eval(
    basis: SpectralBasis,
    x,
    y,
    m: int | None = None,
    margin: float | None = None,
) -> float:
    """Evaluate the rank-``m`` Bergman reproducing kernel at two interior points."""
    return TruncatedKernel(basis, m, margin).eval(x, y)


@dataclass(eq=False)
class BergmanDecomposition:
    """Orthogonal split ``f = harmonic + lap(potential)``.

    ``potential`` has zero trace; ``flux_norm`` is the normalized boundary
    norm of its recovered flux, which vanishes as the truncation rank and
    the mesh are refined.  ``converged`` records whether the flux is below
    the requested tolerance.
    """

    harmonic: InteriorField
    potential: InteriorField
    remainder: InteriorField
    flux_norm: float
    converged: bool


def biharmonic_potential(
    f: InteriorField,
    basis: SpectralBasis,
    m: int | None = None,
    flux_tol: float = 1e-2,
    tail_tol: float = 1e-3,
) -> BergmanDecomposition:
    """Biharmonic potential of ``f``: zero-trace ``psi`` with ``lap psi = f - P_H f``.

    The harmonic part is removed by basis truncation and the potential is
    recovered with a single Dirichlet solve; membership in the zero-flux
    class is checked a posteriori through the recovered flux.  A
    :class:`TruncationWarning` is raised when the projection has not yet
    settled between ranks ``m - 5`` and ``m``.
    """
    m = _resolve_rank(basis, m)
    coeffs = basis.interior_coeffs(f)[:m]
    scale = max(f.norm_l2(), 1e-300)
    if m > 5:
        settle = float(np.sqrt(np.sum(coeffs[m - 5 :] ** 2))) / scale
        if settle > tail_tol:
            warnings.warn(
                f"projection still moving between ranks {m - 5} and {m} "
                f"(relative change {settle:.3e})",
                TruncationWarning,
                stacklevel=2,
            )
    harmonic = InteriorField(basis.mesh, basis.h_matrix[:, :m] @ coeffs)
    remainder = InteriorField(basis.mesh, f.values - harmonic.values)
    psi = solve_dirichlet_poisson(basis.mesh, remainder, None)
    flux = normal_flux(basis.mesh, psi, remainder)
    rms = scale / np.sqrt(basis.mesh.area)
    flux_norm = flux.norm_normalized()
    return BergmanDecomposition(
        harmonic, psi, remainder, flux_norm, bool(flux_norm <= flux_tol * rms)
    )


def neumann_biharmonic_extension(
    eta: BoundaryField,
    basis: SpectralBasis,
    m: int | None = None,
    tail_tol: float = 1e-4,
) -> InteriorField:
    """Minimal-Laplacian-norm biharmonic field with zero trace and flux ``eta``.

    Expands ``eta`` over the boundary functions ``w_j`` and returns
    ``sum_j sqrt(q_j |bdy|) <eta, w_j> b_j``; its squared Laplacian norm is
    ``|bdy| * sum_j q_j <eta, w_j>**2``.  Slow coefficient decay raises a
    :class:`TruncationWarning`.
    """
    m = _resolve_rank(basis, m)
    ghat = basis.boundary_coeffs(eta)[:m]
    total = eta.inner_normalized(eta)
    tail = total - float(ghat @ ghat)
    if tail > tail_tol * max(total, 1e-300):
        warnings.warn(
            f"flux data tail {tail:.3e} above tolerance; extend the basis",
            TruncationWarning,
            stacklevel=2,
        )
    weights = np.sqrt(basis.q[:m] * basis.boundary_length) * ghat
    return InteriorField(basis.mesh, basis.b_matrix[:, :m] @ weights)


def harmonic_trace(k_coeffs, basis: SpectralBasis) -> BoundaryField:
    """Boundary trace of a Bergman-space member given by its coefficients.

    Returns ``|bdy|**-0.5 * sum_j sqrt(q_j) k_coeffs[j] w_j``; the growth
    of the weights with ``j`` reflects that the trace map is unbounded.
    """
    c = np.asarray(k_coeffs, dtype=float)
    if c.size > basis.rank:
        raise ValueError("more coefficients than basis modes")
    k = c.size
    weights = np.sqrt(basis.q[:k]) * c / np.sqrt(basis.boundary_length)
    return BoundaryField(basis.mesh, basis.w_matrix[:, :k] @ weights)


def kernel_grid_csv(basis: SpectralBasis, x, m: int | None = None) -> str:
    """CSV ``x,y,value`` of the truncated kernel slice ``R_M(x, .)`` on the vertices."""
    kernel = TruncatedKernel(basis, m)
    values = kernel.values_on_vertices(x)
    buf = io.StringIO()
    buf.write("x,y,value\n")
    for (px, py), v in zip(basis.mesh.vertices, values):
        buf.write(
            f"{format(px, '.17g')},{format(py, '.17g')},{format(v, '.17g')}\n"
        )
    return buf.getvalue()
