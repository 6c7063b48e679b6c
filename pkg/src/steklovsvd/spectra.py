"""The three eigenproblems and their derived spectral quantities.

* :func:`dbs_eigensolve` - biharmonic Steklov eigenpairs with zero trace,
  where the eigenvalue couples the Laplacian trace to the normal flux.
  The discrete operator composition (harmonic extension, zero-trace
  Poisson solve, consistent flux) is self-adjoint and positive in the
  boundary L2 inner product:  ``<T g, g'> = <E g, E g'>_{L2(domain)}``.
  The solve is therefore posed as the symmetric generalized eigenproblem
  ``N g = beta W g`` with ``N`` the Gram matrix of discrete harmonic
  extensions and ``W`` the (diagonal) boundary quadrature, and the
  eigenvalues of interest are ``q = 1 / beta``.  This is equivalent to
  sequentially maximizing the boundary-flux functional over Laplacian-unit
  balls, but far better conditioned.
* :func:`harmonic_steklov_eigensolve` - Dirichlet-to-Neumann eigenpairs
  through the boundary Schur complement of the stiffness matrix.
* :func:`dirichlet_laplacian_eigensolve` - Dirichlet Laplacian eigenpairs
  with consistently recovered boundary fluxes.

Degenerate eigenvalue clusters (relative gap below 1e-6) are rotated to a
deterministic basis: within each cluster the eigenvectors are re-combined
by Gram-Schmidt against coordinate directions in fixed node order, and
every eigenfield is scaled so its first significantly nonzero coefficient
is positive.  All returned orderings are deterministic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .errors import CapacityError, IterationLimitError, TruncationWarning
from .fem import (
    BoundaryField,
    InteriorField,
    dtn_apply,
    normal_flux,
    operators,
    t_apply,
    trace,
)
from .meshing import Mesh, mesh_hash

__all__ = [
    "DbsEigenpair",
    "SpectralBasis",
    "HarmonicSteklovPair",
    "DirichletEigenpair",
    "HassellTaoReport",
    "dbs_eigensolve",
    "harmonic_steklov_eigensolve",
    "dirichlet_laplacian_eigensolve",
    "normal_derivative_series",
    "hassell_tao_check",
    "trace_sobolev_norm",
    "basis_to_json_dict",
    "basis_from_json_dict",
]

_DENSE_BOUNDARY_LIMIT = 2000
_CLUSTER_GAP = 1e-6
_EIG_TOL = 1e-10


def _start_vector(n: int) -> np.ndarray:
    return np.random.default_rng(20160419).standard_normal(n)


def _canonicalize_clusters(values: np.ndarray, columns: list[np.ndarray], reference: np.ndarray):
    """Rotate eigenvector clusters to a deterministic basis, in place.

    ``values`` are sorted eigenvalues; ``columns`` is a list of matrices
    whose columns transform identically under cluster rotations (they are
    all linear images of the same eigenvectors); ``reference`` supplies the
    rows (fixed node ordering) used to pick the rotation.
    """
    n = values.size
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and abs(values[stop] - values[stop - 1]) <= _CLUSTER_GAP * max(
            abs(values[stop]), 1e-300
        ):
            stop += 1
        d = stop - start
        if d > 1:
            block = reference[:, start:stop]
            scale = float(np.max(np.abs(block))) or 1.0
            basis: list[np.ndarray] = []
            for row in block:
                v = row.copy()
                for u in basis:
                    v -= (u @ v) * u
                norm = np.linalg.norm(v)
                if norm > 1e-8 * scale:
                    basis.append(v / norm)
                if len(basis) == d:
                    break
            if len(basis) == d:
                rot = np.column_stack(basis)
                for mat in columns:
                    mat[:, start:stop] = mat[:, start:stop] @ rot
        start = stop


def _fix_signs(columns: list[np.ndarray], reference: np.ndarray):
    """Flip columns so the first significant coefficient of ``reference`` is positive.

    The significance cutoff sits well above discretization noise so the
    convention does not hinge on the sign of a nearly-zero coefficient.
    """
    for j in range(reference.shape[1]):
        col = reference[:, j]
        scale = float(np.max(np.abs(col)))
        if scale == 0.0:
            continue
        idx = np.flatnonzero(np.abs(col) > 1e-3 * scale)[0]
        if col[idx] < 0:
            for mat in columns:
                mat[:, j] = -mat[:, j]


@dataclass(eq=False)
class DbsEigenpair:
    """One biharmonic Steklov eigenpair.

    ``b`` has zero trace and unit Laplacian norm, ``h`` is its (harmonic)
    Laplacian with unit L2 norm, and ``w = sqrt(q |bdy|) * D_nu b`` has
    unit norm in the normalized boundary inner product.
    """

    q: float
    b: InteriorField
    h: InteriorField
    w: BoundaryField

    @property
    def flux(self) -> BoundaryField:
        """Consistent normal flux of ``b`` (equals ``w / sqrt(q |bdy|)``)."""
        mesh = self.b.mesh
        scale = np.sqrt(self.q * mesh.boundary_length)
        return BoundaryField(mesh, self.w.values / scale)


class SpectralBasis:
    """Ordered biharmonic Steklov eigenpairs plus vectorized accessors.

    Attributes
    ----------
    mesh : Mesh
    q : ndarray, shape (M,)
        Eigenvalues in nondecreasing order, all strictly positive.
    b_matrix, h_matrix : ndarray, shape (n, M)
        Stacked coefficient vectors of the eigenfields.
    w_matrix : ndarray, shape (n_boundary, M)
        Stacked boundary functions ``w_j``.
    pairs : list of DbsEigenpair
    """

    def __init__(self, mesh: Mesh, q: np.ndarray, b_matrix, h_matrix, w_matrix):
        self.mesh = mesh
        self.q = np.asarray(q, dtype=float)
        self.b_matrix = np.asarray(b_matrix, dtype=float)
        self.h_matrix = np.asarray(h_matrix, dtype=float)
        self.w_matrix = np.asarray(w_matrix, dtype=float)
        self.boundary_length = mesh.boundary_length
        self.pairs = [
            DbsEigenpair(
                float(self.q[j]),
                InteriorField(mesh, self.b_matrix[:, j]),
                InteriorField(mesh, self.h_matrix[:, j]),
                BoundaryField(mesh, self.w_matrix[:, j]),
            )
            for j in range(self.q.size)
        ]

    @property
    def rank(self) -> int:
        return self.q.size

    def interior_coeffs(self, f: InteriorField) -> np.ndarray:
        """Coefficients ``<f, h_j>`` in L2(domain), via the mass matrix."""
        ops = operators(self.mesh)
        return self.h_matrix.T @ (ops.mass @ f.values)

    def boundary_coeffs(self, g: BoundaryField) -> np.ndarray:
        """Coefficients ``<g, w_j>`` in the normalized boundary inner product."""
        weighted = self.mesh.boundary_weights * g.values
        return (self.w_matrix.T @ weighted) / self.boundary_length


@dataclass(eq=False)
class HarmonicSteklovPair:
    """Dirichlet-to-Neumann eigenpair with unit-norm boundary trace."""

    delta: float
    s: InteriorField


@dataclass(eq=False)
class DirichletEigenpair:
    """Dirichlet Laplacian eigenpair with consistently recovered flux."""

    lam: float
    e: InteriorField
    flux: BoundaryField


def _check_modes(m: int, limit: int, what: str):
    if m < 1:
        raise CapacityError(f"need at least one mode, got M={m}")
    if m > limit:
        raise CapacityError(f"M={m} exceeds the {what} capacity {limit} of this mesh")


def _dbs_spectrum_dense(ops, n_modes: int):
    h_ext = ops.extend_boundary_columns(np.eye(ops.boundary_idx.size))
    gram = h_ext.T @ (ops.mass @ h_ext)
    sw = np.sqrt(ops.boundary_weights)
    sym = gram / sw[:, None] / sw[None, :]
    vals, vecs = sla.eigh(sym)
    beta = vals[::-1][:n_modes]
    g_cols = (vecs / sw[:, None])[:, ::-1][:, :n_modes]
    return beta, g_cols


def _dbs_spectrum_lanczos(mesh, ops, n_modes: int):
    sw = np.sqrt(ops.boundary_weights)
    nb = sw.size

    def matvec(y):
        g = BoundaryField(mesh, y / sw)
        return sw * t_apply(mesh, g).values

    op = spla.LinearOperator((nb, nb), matvec=matvec, dtype=float)
    try:
        vals, vecs = spla.eigsh(
            op, k=n_modes, which="LA", tol=_EIG_TOL, v0=_start_vector(nb)
        )
    except spla.ArpackNoConvergence as exc:
        raise IterationLimitError(
            "Lanczos iteration did not converge; partial results refused"
        ) from exc
    order = np.argsort(vals)[::-1]
    return vals[order], (vecs / sw[:, None])[:, order]


def dbs_eigensolve(mesh: Mesh, n_modes: int, method: str = "auto") -> SpectralBasis:
    """Smallest ``n_modes`` biharmonic Steklov eigenpairs of ``mesh``.

    Parameters
    ----------
    mesh : Mesh
    n_modes : int
        Number of requested eigenpairs; at most ``boundary nodes - 1``.
    method : {"auto", "dense", "lanczos"}
        "dense" solves the full boundary problem (default up to 2000
        boundary nodes); "lanczos" applies the operator composition
        iteratively.

    Returns
    -------
    SpectralBasis
        Eigenvalues ascending; eigenfields normalized and orthonormal as
        described on :class:`DbsEigenpair`.
    """
    ops = operators(mesh)
    nb = ops.boundary_idx.size
    _check_modes(n_modes, nb - 1, "boundary-node")
    if method == "auto":
        method = "dense" if nb <= _DENSE_BOUNDARY_LIMIT else "lanczos"
    if method == "dense":
        beta, g_cols = _dbs_spectrum_dense(ops, n_modes)
    elif method == "lanczos":
        beta, g_cols = _dbs_spectrum_lanczos(mesh, ops, n_modes)
    else:
        raise ValueError(f"unknown method {method!r}")
    if beta[-1] <= 0:
        raise IterationLimitError("eigensolver returned a nonpositive spectrum")
    q = 1.0 / beta

    h_mat = ops.extend_boundary_columns(g_cols)
    mh = ops.mass @ h_mat
    scale = np.sqrt(np.einsum("ij,ij->j", h_mat, mh))
    h_mat /= scale
    mh /= scale
    g_cols = g_cols / scale
    b_mat = np.zeros_like(h_mat)
    b_mat[ops.interior_idx] = ops.interior_lu.solve(-mh[ops.interior_idx])
    residual = ops.stiffness @ b_mat + mh
    flux = residual[ops.boundary_idx] / ops.boundary_weights[:, None]
    w_mat = np.sqrt(q * mesh.boundary_length)[None, :] * flux

    # Rotate the finished orthonormal systems: cluster rotations then leave
    # the Gram identities at rounding level, while the per-mode coupling
    # identities only move at the (sub-1e-6) eigenvalue split of the cluster.
    _canonicalize_clusters(q, [g_cols, h_mat, b_mat, flux, w_mat], g_cols)
    _fix_signs([g_cols, h_mat, b_mat, flux, w_mat], h_mat)
    return SpectralBasis(mesh, q, b_mat, h_mat, w_mat)


def harmonic_steklov_eigensolve(
    mesh: Mesh, n_modes: int, method: str = "auto"
) -> list[HarmonicSteklovPair]:
    """Smallest ``n_modes`` Dirichlet-to-Neumann eigenpairs.

    The first eigenvalue is zero with constant eigenfunction; traces are
    orthonormal in the normalized boundary inner product.
    """
    ops = operators(mesh)
    nb = ops.boundary_idx.size
    _check_modes(n_modes, nb, "boundary-node")
    if method == "auto":
        method = "dense" if nb <= _DENSE_BOUNDARY_LIMIT else "lanczos"
    sw = np.sqrt(ops.boundary_weights)
    if method == "dense":
        x = ops.extend_boundary_columns(np.eye(nb))
        schur = (ops.stiffness @ x)[ops.boundary_idx]
        schur = 0.5 * (schur + schur.T)
        sym = schur / sw[:, None] / sw[None, :]
        vals, vecs = sla.eigh(sym)
        delta = vals[:n_modes]
        g_cols = (vecs / sw[:, None])[:, :n_modes]
    elif method == "lanczos":

        def matvec(y):
            g = BoundaryField(mesh, y / sw)
            return sw * dtn_apply(mesh, g).values

        op = spla.LinearOperator((nb, nb), matvec=matvec, dtype=float)
        try:
            vals, vecs = spla.eigsh(
                op, k=n_modes, which="SA", tol=_EIG_TOL, v0=_start_vector(nb)
            )
        except spla.ArpackNoConvergence as exc:
            raise IterationLimitError(
                "Lanczos iteration did not converge; partial results refused"
            ) from exc
        order = np.argsort(vals)
        delta = vals[order]
        g_cols = (vecs / sw[:, None])[:, order]
    else:
        raise ValueError(f"unknown method {method!r}")

    if delta[0] < -1e-8 * max(abs(delta[-1]), 1.0):
        raise IterationLimitError("Dirichlet-to-Neumann spectrum came out negative")
    delta = np.maximum(delta, 0.0)
    g_cols = g_cols * np.sqrt(mesh.boundary_length)

    _canonicalize_clusters(delta, [g_cols], g_cols)
    s_mat = ops.extend_boundary_columns(g_cols)
    _fix_signs([s_mat], s_mat)
    return [
        HarmonicSteklovPair(float(delta[j]), InteriorField(mesh, s_mat[:, j]))
        for j in range(n_modes)
    ]


def dirichlet_laplacian_eigensolve(mesh: Mesh, n_modes: int) -> list[DirichletEigenpair]:
    """Smallest ``n_modes`` Dirichlet Laplacian eigenpairs, L2-orthonormal."""
    ops = operators(mesh)
    ni = ops.interior_idx.size
    _check_modes(n_modes, ni, "interior-node")
    a_ii = ops.stiffness[ops.interior_idx][:, ops.interior_idx]
    m_ii = ops.mass[ops.interior_idx][:, ops.interior_idx]
    if ni <= 600 or n_modes > ni - 2:
        vals, vecs = sla.eigh(
            a_ii.toarray(), m_ii.toarray(), subset_by_index=[0, n_modes - 1]
        )
    else:
        try:
            vals, vecs = spla.eigsh(
                a_ii.tocsc(),
                k=n_modes,
                M=m_ii.tocsc(),
                sigma=0.0,
                which="LM",
                tol=_EIG_TOL,
                v0=_start_vector(ni),
            )
        except spla.ArpackNoConvergence as exc:
            raise IterationLimitError(
                "shift-invert Lanczos did not converge; partial results refused"
            ) from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    if vals[0] <= 0:
        raise IterationLimitError("Dirichlet spectrum came out nonpositive")

    e_mat = np.zeros((mesh.vertices.shape[0], n_modes))
    e_mat[ops.interior_idx] = vecs
    scale = np.sqrt(np.einsum("ij,ij->j", e_mat, ops.mass @ e_mat))
    e_mat /= scale
    _canonicalize_clusters(vals, [e_mat], e_mat[ops.interior_idx])
    _fix_signs([e_mat], e_mat)

    pairs = []
    for j in range(n_modes):
        e = InteriorField(mesh, e_mat[:, j])
        f = InteriorField(mesh, -vals[j] * e_mat[:, j])
        pairs.append(DirichletEigenpair(float(vals[j]), e, normal_flux(mesh, e, f)))
    return pairs


def normal_derivative_series(
    e_coeffs, lam: float, basis: SpectralBasis
) -> BoundaryField:
    """Truncated flux series of a Dirichlet eigenfunction.

    Given interior coefficients ``e_coeffs[j] = <e, h_j>`` and the
    eigenvalue, returns
    ``- lam * sum_j e_coeffs[j] / sqrt(|bdy| q_j) * w_j``,
    which converges to the recovered flux of ``e`` as the rank grows.
    """
    if lam <= 0:
        raise ValueError(f"Dirichlet eigenvalue must be positive, got {lam}")
    c = np.asarray(e_coeffs, dtype=float)
    if c.size > basis.rank:
        raise CapacityError("more coefficients than basis modes")
    k = c.size
    weights = -lam * c / np.sqrt(basis.boundary_length * basis.q[:k])
    return BoundaryField(basis.mesh, basis.w_matrix[:, :k] @ weights)


@dataclass(frozen=True)
class HassellTaoReport:
    """Boundary flux energy of a Dirichlet eigenfunction against its bound."""

    flux_sq: float
    bound: float
    bound_weak: float
    ratio: float


def hassell_tao_check(pair: DirichletEigenpair, basis: SpectralBasis) -> HassellTaoReport:
    """Check that the flux energy obeys ``lam**2 ||P_H e||**2 / q_1``.

    ``flux_sq`` is the squared boundary L2 norm of the recovered flux;
    ``bound`` uses the harmonic projection of the eigenfunction, and
    ``bound_weak`` replaces that projection norm by its upper bound one.
    """
    norm = pair.e.norm_l2()
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"eigenfunction must be L2-normalized, got norm {norm}")
    flux_sq = pair.flux.norm_dsigma() ** 2
    coeffs = basis.interior_coeffs(pair.e)
    proj_sq = float(coeffs @ coeffs)
    q1 = float(basis.q[0])
    bound = pair.lam**2 * proj_sq / q1
    return HassellTaoReport(flux_sq, bound, pair.lam**2 / q1, flux_sq / bound)


def trace_sobolev_norm(
    g: BoundaryField,
    s: float,
    steklov: list[HarmonicSteklovPair],
    tail_tol: float = 1e-6,
) -> float:
    """Spectrally defined trace-space norm of boundary data.

    Computes ``(sum_j (1 + delta_j)**(2 s) |<g, s_j>|**2)**0.5`` over the
    supplied Dirichlet-to-Neumann eigenpairs.  ``s = 0`` reproduces the
    normalized boundary norm by Parseval; negative ``s`` yields the dual
    pairing weights.  When the captured coefficients miss more than
    ``tail_tol`` of the squared norm of ``g``, a :class:`TruncationWarning`
    is attached to the result.
    """
    if abs(s) > 1:
        raise ValueError(f"order s must satisfy |s| <= 1, got {s}")
    ghat = np.array([g.inner_normalized(trace(p.s)) for p in steklov])
    delta = np.array([p.delta for p in steklov])
    total = g.inner_normalized(g)
    tail = total - float(ghat @ ghat)
    if tail > tail_tol * max(total, 1e-300):
        warnings.warn(
            f"coefficient tail {tail:.3e} above tolerance; extend the eigenbasis",
            TruncationWarning,
            stacklevel=2,
        )
    return float(np.sqrt(np.sum((1.0 + delta) ** (2.0 * s) * ghat**2)))


# -- basis serialization ------------------------------------------------------------


def basis_to_json_dict(basis: SpectralBasis, domain: str) -> dict:
    """Schema: domain, boundary_length, M, q, b, h, w, mesh_hash."""
    return {
        "domain": domain,
        "boundary_length": basis.boundary_length,
        "M": int(basis.rank),
        "q": [float(v) for v in basis.q],
        "b": [[float(v) for v in basis.b_matrix[:, j]] for j in range(basis.rank)],
        "h": [[float(v) for v in basis.h_matrix[:, j]] for j in range(basis.rank)],
        "w": [[float(v) for v in basis.w_matrix[:, j]] for j in range(basis.rank)],
        "mesh_hash": mesh_hash(basis.mesh),
    }


def basis_from_json_dict(data: dict, mesh: Mesh) -> SpectralBasis:
    """Rebuild a basis against ``mesh``; the stored mesh hash must match."""
    if data["mesh_hash"] != mesh_hash(mesh):
        raise ValueError("basis was computed on a different mesh (hash mismatch)")
    q = np.asarray(data["q"], dtype=float)
    b = np.asarray(data["b"], dtype=float).T
    h = np.asarray(data["h"], dtype=float).T
    w = np.asarray(data["w"], dtype=float).T
    return SpectralBasis(mesh, q, b, h, w)
