"""Piecewise-linear finite elements: fields, operators, solves, flux recovery.

Sign convention throughout: ``lap u = f`` with ``lap = div grad`` (no minus
sign).  The weak form of the Dirichlet problem is therefore

    integral(grad u . grad v) = - integral(f v)   for interior test v.

Boundary fluxes are recovered variationally: ``normal_flux`` returns the
unique boundary function ``d`` with

    <d, trace(v)>_{dsigma} = integral(grad u . grad v) + integral(f v)

for every test function ``v``, which is the discrete Green-formula flux and
is superconvergent relative to pointwise gradient sampling.

Norm conventions for boundary data: ``norm_dsigma`` is the plain L2 norm
with respect to arclength measure; ``norm_normalized`` divides the measure
by the boundary length (so constants have unit norm).
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .meshing import Mesh

__all__ = [
    "InteriorField",
    "BoundaryField",
    "AssembledOperators",
    "operators",
    "trace",
    "interpolate_values",
    "solve_dirichlet_poisson",
    "harmonic_extension",
    "normal_flux",
    "dtn_apply",
    "t_apply",
    "green_identity_residual",
]


@dataclass(eq=False)
class InteriorField:
    """A function on the domain: one coefficient per mesh vertex."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.vertices.shape[0],):
            raise ValueError("coefficient count must equal the vertex count")

    @classmethod
    def zero(cls, mesh: Mesh) -> "InteriorField":
        return cls(mesh, np.zeros(mesh.vertices.shape[0]))

    @classmethod
    def constant(cls, mesh: Mesh, value: float) -> "InteriorField":
        return cls(mesh, np.full(mesh.vertices.shape[0], float(value)))

    @classmethod
    def from_function(cls, mesh: Mesh, fn) -> "InteriorField":
        """Sample ``fn(x, y)`` (vectorized) at the mesh vertices."""
        return cls(mesh, np.asarray(fn(mesh.vertices[:, 0], mesh.vertices[:, 1]), dtype=float))

    def inner(self, other: "InteriorField") -> float:
        """L2(domain) inner product through the assembled mass matrix."""
        ops = operators(self.mesh)
        return float(self.values @ (ops.mass @ other.values))

    def norm_l2(self) -> float:
        return float(np.sqrt(max(self.inner(self), 0.0)))


@dataclass(eq=False)
class BoundaryField:
    """A function on the boundary: one value per boundary node (loop order)."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.boundary_nodes.shape[0],):
            raise ValueError("value count must equal the boundary node count")

    @classmethod
    def zero(cls, mesh: Mesh) -> "BoundaryField":
        return cls(mesh, np.zeros(mesh.boundary_nodes.shape[0]))

    @classmethod
    def constant(cls, mesh: Mesh, value: float) -> "BoundaryField":
        return cls(mesh, np.full(mesh.boundary_nodes.shape[0], float(value)))

    @classmethod
    def from_function(cls, mesh: Mesh, fn) -> "BoundaryField":
        p = mesh.vertices[mesh.boundary_nodes]
        return cls(mesh, np.asarray(fn(p[:, 0], p[:, 1]), dtype=float))

    def inner_dsigma(self, other: "BoundaryField") -> float:
        """Boundary L2 inner product with respect to arclength measure."""
        return float(np.sum(self.mesh.boundary_weights * self.values * other.values))

    def inner_normalized(self, other: "BoundaryField") -> float:
        """Inner product with respect to the length-normalized boundary measure."""
        return self.inner_dsigma(other) / self.mesh.boundary_length

    def norm_dsigma(self) -> float:
        return float(np.sqrt(max(self.inner_dsigma(self), 0.0)))

    def norm_normalized(self) -> float:
        return self.norm_dsigma() / np.sqrt(self.mesh.boundary_length)


class AssembledOperators:
    """Stiffness, mass and boundary quadrature for one mesh, assembled once.

    The stiffness matrix is symmetric positive semidefinite with kernel
    spanned by constants; the mass matrix is symmetric positive definite.
    The interior block of the stiffness matrix is factorized once (sparse
    LU) and reused by every solve on the mesh.  Instances are immutable
    and safe to share between threads.
    """

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        v, t = mesh.vertices, mesh.triangles
        p = v[t]
        # Barycentric gradient coefficients: grad(lambda_i) = (b_i, c_i) / (2A).
        b = np.stack(
            [
                p[:, 1, 1] - p[:, 2, 1],
                p[:, 2, 1] - p[:, 0, 1],
                p[:, 0, 1] - p[:, 1, 1],
            ],
            axis=1,
        )
        c = np.stack(
            [
                p[:, 2, 0] - p[:, 1, 0],
                p[:, 0, 0] - p[:, 2, 0],
                p[:, 1, 0] - p[:, 0, 0],
            ],
            axis=1,
        )
        area = mesh.interior_weights
        a_loc = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (
            4.0 * area[:, None, None]
        )
        m_loc = (area[:, None, None] / 12.0) * (np.ones((3, 3)) + np.eye(3))
        rows = np.repeat(t, 3, axis=1).ravel()
        cols = np.tile(t, (1, 3)).ravel()
        n = v.shape[0]
        self.stiffness = sp.coo_matrix(
            (a_loc.ravel(), (rows, cols)), shape=(n, n)
        ).tocsr()
        self.mass = sp.coo_matrix((m_loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()

        self.interior_idx = mesh.interior_nodes
        self.boundary_idx = mesh.boundary_nodes
        self.boundary_weights = mesh.boundary_weights
        self.boundary_length = mesh.boundary_length

    @cached_property
    def stiffness_ib(self) -> sp.csr_matrix:
        return self.stiffness[self.interior_idx][:, self.boundary_idx]

    @cached_property
    def interior_lu(self):
        a_ii = self.stiffness[self.interior_idx][:, self.interior_idx].tocsc()
        return splu(a_ii)

    def extend_boundary_columns(self, g_columns: np.ndarray) -> np.ndarray:
        """Discrete harmonic extension of boundary data, one column per field."""
        g = np.atleast_2d(np.asarray(g_columns, dtype=float).T).T
        full = np.zeros((self.mesh.vertices.shape[0], g.shape[1]))
        full[self.boundary_idx] = g
        full[self.interior_idx] = self.interior_lu.solve(-(self.stiffness_ib @ g))
        return full


_OPERATOR_CACHE: "weakref.WeakKeyDictionary[Mesh, AssembledOperators]" = (
    weakref.WeakKeyDictionary()
)


def operators(mesh: Mesh) -> AssembledOperators:
    """Assembled operators for ``mesh``, cached per mesh instance."""
    ops = _OPERATOR_CACHE.get(mesh)
    if ops is None:
        ops = AssembledOperators(mesh)
        _OPERATOR_CACHE[mesh] = ops
    return ops


def trace(u: InteriorField) -> BoundaryField:
    """Boundary trace: restriction to the boundary nodes."""
    return BoundaryField(u.mesh, u.values[u.mesh.boundary_nodes])


def interpolate_values(mesh: Mesh, values: np.ndarray, points) -> np.ndarray:
    """Barycentric interpolation of nodal data at interior points.

    ``values`` may be a vector (one field) or an ``(n, m)`` matrix of
    stacked fields; the result has one row per point.
    """
    values = np.asarray(values, dtype=float)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty((pts.shape[0],) + values.shape[1:])
    for i, point in enumerate(pts):
        ti, lam = mesh.locate(point)
        out[i] = lam @ values[mesh.triangles[ti]]
    return out


def _field_values(mesh: Mesh, field, boundary: bool) -> np.ndarray:
    if field is None:
        size = mesh.boundary_nodes.shape[0] if boundary else mesh.vertices.shape[0]
        return np.zeros(size)
    if boundary and isinstance(field, BoundaryField):
        return field.values
    if not boundary and isinstance(field, InteriorField):
        return field.values
    kind = "BoundaryField" if boundary else "InteriorField"
    raise TypeError(f"expected {kind} or None, got {type(field).__name__}")


def solve_dirichlet_poisson(mesh: Mesh, f, g) -> InteriorField:
    """Solve ``lap u = f`` with Dirichlet data ``u = g`` on the boundary.

    Parameters
    ----------
    mesh : Mesh
    f : InteriorField or None
        Right-hand side (``None`` means zero).
    g : BoundaryField or None
        Boundary values (``None`` means zero).

    Returns
    -------
    InteriorField
        Equals ``g`` exactly at boundary nodes and satisfies the discrete
        weak form at interior nodes.
    """
    ops = operators(mesh)
    fv = _field_values(mesh, f, boundary=False)
    gv = _field_values(mesh, g, boundary=True)
    rhs = -(ops.mass @ fv)[ops.interior_idx] - ops.stiffness_ib @ gv
    u = np.zeros(mesh.vertices.shape[0])
    u[ops.interior_idx] = ops.interior_lu.solve(rhs)
    u[ops.boundary_idx] = gv
    return InteriorField(mesh, u)


def harmonic_extension(mesh: Mesh, g) -> InteriorField:
    """Discrete harmonic extension of boundary data ``g``."""
    return solve_dirichlet_poisson(mesh, None, g)


def normal_flux(mesh: Mesh, u: InteriorField, f) -> BoundaryField:
    """Consistent (variational) normal flux of ``u`` given ``lap u = f``."""
    ops = operators(mesh)
    fv = _field_values(mesh, f, boundary=False)
    residual = ops.stiffness @ u.values + ops.mass @ fv
    return BoundaryField(mesh, residual[ops.boundary_idx] / ops.boundary_weights)


def dtn_apply(mesh: Mesh, g: BoundaryField) -> BoundaryField:
    """Dirichlet-to-Neumann map: flux of the harmonic extension of ``g``."""
    return normal_flux(mesh, harmonic_extension(mesh, g), None)


def t_apply(mesh: Mesh, g: BoundaryField) -> BoundaryField:
    """Flux of the zero-trace Poisson solve driven by the extension of ``g``.

    Composition: extend ``g`` harmonically to ``h``, solve ``lap b = h``
    with zero trace, return the consistent flux of ``b``.  Boundary
    eigenfunctions of the biharmonic Steklov problem satisfy
    ``t_apply(g) = g / q`` for the corresponding eigenvalue ``q``.
    """
    h = harmonic_extension(mesh, g)
    b = solve_dirichlet_poisson(mesh, h, None)
    return normal_flux(mesh, b, h)


def green_identity_residual(
    mesh: Mesh,
    u: InteriorField,
    v: InteriorField,
    fu,
    fv,
) -> float:
    """Defect in the second Green identity for two discrete solutions.

    Both ``(u, fu)`` and ``(v, fv)`` must satisfy the discrete equation
    ``lap u = fu`` at interior nodes; the residual

        | integral(u fv - v fu)
          - |bdy| ( <D_nu v, u>_normalized - <D_nu u, v>_normalized ) |

    is then at rounding level.
    """
    ops = operators(mesh)
    fuv = _field_values(mesh, fu, boundary=False)
    fvv = _field_values(mesh, fv, boundary=False)
    du = normal_flux(mesh, u, fu)
    dv = normal_flux(mesh, v, fv)
    volume = u.values @ (ops.mass @ fvv) - v.values @ (ops.mass @ fuv)
    boundary = ops.boundary_length * (
        dv.inner_normalized(trace(u)) - du.inner_normalized(trace(v))
    )
    return float(abs(volume - boundary))
