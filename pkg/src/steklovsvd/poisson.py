"""Singular value decomposition of the harmonic extension (Poisson) operator.

Viewed as a map from boundary L2 data to square-integrable harmonic
functions, the extension operator sends the orthonormal boundary system
``w_j`` to the orthonormal harmonic system ``h_j`` scaled by
``sqrt(|bdy| / q_j)``; with the normalization conventions used here its
operator norm from L2(dsigma) to L2(domain) is ``1 / sqrt(q_1)`` and its
kernel - the Poisson kernel - has the rank-``M`` truncation

    P_M(x, z) = sum_{j<=M} h_j(x) w_j(z) / sqrt(|bdy| q_j).

Truncation errors obey ``||E g - E_M g|| <= sqrt(|bdy| / q_{M+1})
||g - g_M||_normalized`` with ``g_M`` the rank-``M`` boundary projection.

Normalization ledger: boundary coefficients always use the normalized
inner product (measure divided by boundary length); operator norms are
reported for the L2(dsigma) -> L2(domain) convention, with the normalized
variant labeled separately where both appear in reports.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, OutsideDomainError
from .fem import BoundaryField, InteriorField, harmonic_extension, interpolate_values
from .spectra import SpectralBasis

__all__ = [
    "PoissonSvd",
    "extend_harmonic_svd",
    "poisson_kernel_eval",
    "kernel_slice",
    "kernel_slice_csv",
    "extension_norm",
    "TruncationReport",
    "truncation_error_report",
]


@dataclass(eq=False)
class PoissonSvd:
    """Singular triples of the harmonic extension operator.

    Right singular vectors are the boundary functions ``w_j``, left
    singular vectors are the harmonic fields ``h_j``, and the singular
    values ``1 / sqrt(q_j)`` are nonincreasing and tend to zero.
    """

    basis: SpectralBasis
    singular_values: np.ndarray = field(init=False)

    def __post_init__(self):
        self.singular_values = 1.0 / np.sqrt(self.basis.q)

    @classmethod
    def from_basis(cls, basis: SpectralBasis) -> "PoissonSvd":
        return cls(basis)

    @property
    def rank(self) -> int:
        return self.basis.rank

    @property
    def boundary_length(self) -> float:
        return self.basis.boundary_length


def _resolve_rank(svd: PoissonSvd, m) -> int:
    m = svd.rank if m is None else int(m)
    if m < 1 or m > svd.rank:
        raise CapacityError(f"rank must lie in [1, {svd.rank}], got {m}")
    return m


def extend_harmonic_svd(g: BoundaryField, svd: PoissonSvd, m: int | None = None) -> InteriorField:
    """Rank-``m`` truncated harmonic extension of boundary data ``g``."""
    m = _resolve_rank(svd, m)
    basis = svd.basis
    ghat = basis.boundary_coeffs(g)[:m]
    weights = np.sqrt(svd.boundary_length / basis.q[:m]) * ghat
    return InteriorField(basis.mesh, basis.h_matrix[:, :m] @ weights)


def _boundary_node_index(svd: PoissonSvd, z) -> int:
    mesh = svd.basis.mesh
    z = np.asarray(z, dtype=float)
    coords = mesh.vertices[mesh.boundary_nodes]
    dist = np.hypot(*(coords - z).T)
    idx = int(np.argmin(dist))
    diameter = mesh.vertices.max() - mesh.vertices.min()
    if dist[idx] > 1e-8 * max(diameter, 1.0):
        raise OutsideDomainError(f"{tuple(z)} is not a boundary node of the mesh")
    return idx


def poisson_kernel_eval(svd: PoissonSvd, m: int | None, x, z) -> float:
    """Truncated Poisson kernel ``P_M(x, z)`` at an interior point and boundary node.

    ``x`` must keep one element diameter from the boundary (the series
    degrades there); ``z`` must coincide with a boundary node.
    """
    m = _resolve_rank(svd, m)
    basis = svd.basis
    mesh = basis.mesh
    margin = mesh.max_edge_length
    if mesh.distance_to_boundary(x) < margin:
        raise OutsideDomainError(f"point {tuple(np.asarray(x))} is within the boundary margin")
    hx = interpolate_values(mesh, basis.h_matrix[:, :m], x)[0]
    wz = basis.w_matrix[_boundary_node_index(svd, z), :m]
    return float(np.sum(hx * wz / np.sqrt(svd.boundary_length * basis.q[:m])))


def kernel_slice(svd: PoissonSvd, x, m: int | None = None):
    """Kernel slice ``P_M(x, .)`` over all boundary nodes.

    Returns ``(arclength, values)`` where ``arclength`` is the cumulative
    boundary coordinate of each node along its loop.
    """
    m = _resolve_rank(svd, m)
    basis = svd.basis
    mesh = basis.mesh
    margin = mesh.max_edge_length
    if mesh.distance_to_boundary(x) < margin:
        raise OutsideDomainError(f"point {tuple(np.asarray(x))} is within the boundary margin")
    hx = interpolate_values(mesh, basis.h_matrix[:, :m], x)[0]
    weights = hx / np.sqrt(svd.boundary_length * basis.q[:m])
    values = basis.w_matrix[:, :m] @ weights

    arclength = np.empty(mesh.boundary_nodes.size)
    pos = 0
    edge_pos = 0
    for loop in mesh.boundary_loops:
        lengths = mesh.edge_weights[edge_pos : edge_pos + len(loop)]
        arclength[pos : pos + len(loop)] = np.concatenate([[0.0], np.cumsum(lengths[:-1])])
        pos += len(loop)
        edge_pos += len(loop)
    return arclength, values


def kernel_slice_csv(svd: PoissonSvd, x, m: int | None = None) -> str:
    """CSV ``z_arclength,value`` of the kernel slice at fixed interior ``x``."""
    arclength, values = kernel_slice(svd, x, m)
    buf = io.StringIO()
    buf.write("z_arclength,value\n")
    for a, v in zip(arclength, values):
        buf.write(f"{format(a, '.17g')},{format(v, '.17g')}\n")
    return buf.getvalue()


def extension_norm(svd: PoissonSvd) -> float:
    """Operator norm of the harmonic extension, L2(dsigma) -> L2(domain).

    Equals ``1 / sqrt(q_1)`` by the singular value representation.
    """
    return float(svd.singular_values[0])


@dataclass(frozen=True)
class TruncationReport:
    """Truncation error of the rank-``M`` Poisson operator against its bound."""

    M: int
    error: float
    bound: float
    ratio: float
    norm_convention: str = "dsigma"


def truncation_error_report(
    g: BoundaryField, svd: PoissonSvd, m: int
) -> TruncationReport:
    """Compare ``||E g - E_M g||`` with ``sqrt(|bdy|/q_{M+1}) ||g - g_M||``.

    The reference extension is the finite element harmonic extension on
    the same mesh, so the report isolates truncation error from
    discretization error.  The ratio lies in ``[0, 1]`` up to rounding;
    it is defined as zero when ``g`` has no tail beyond rank ``m``.
    """
    m = int(m)
    if m < 1 or m + 1 > svd.rank:
        raise CapacityError(
            f"need m + 1 <= rank, got m={m} with rank {svd.rank}"
        )
    basis = svd.basis
    full = harmonic_extension(basis.mesh, g)
    truncated = extend_harmonic_svd(g, svd, m)
    diff = InteriorField(basis.mesh, full.values - truncated.values)
    error = diff.norm_l2()
    ghat = basis.boundary_coeffs(g)[:m]
    tail_sq = max(g.inner_normalized(g) - float(ghat @ ghat), 0.0)
    bound = float(np.sqrt(svd.boundary_length / basis.q[m] * tail_sq))
    scale = max(g.norm_normalized(), 1e-300)
    ratio = 0.0 if bound <= 1e-14 * scale else error / bound
    return TruncationReport(m, error, bound, ratio)
