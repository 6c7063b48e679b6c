"""Boundary flux of Dirichlet Laplacian eigenfunctions.

An eigenfunction's normal derivative expands over the boundary system
w_j with coefficients proportional to its harmonic-projection
coefficients.  On the unit disk each eigenfunction has a single angular
frequency, so the series collapses to one term, the flux energy obeys
the Rellich identity (2 lambda on the unit circle), and the flux bound
in terms of the first biharmonic Steklov eigenvalue is strict.
"""

import numpy as np

from steklovsvd import dbs_eigensolve, dirichlet_laplacian_eigensolve, disk_mesh
from steklovsvd.fem import BoundaryField
from steklovsvd.spectra import hassell_tao_check, normal_derivative_series

mesh = disk_mesh(1.0, 0.03)
basis = dbs_eigensolve(mesh, 60)
pairs = dirichlet_laplacian_eigensolve(mesh, 8)

print("lambda      flux^2/(2 lambda)   series vs flux   HT ratio")
for pair in pairs:
    flux_sq = pair.flux.inner_dsigma(pair.flux)
    coeffs = basis.interior_coeffs(pair.e)
    series = normal_derivative_series(coeffs, pair.lam, basis)
    mismatch = (
        BoundaryField(mesh, series.values - pair.flux.values).norm_dsigma()
        / pair.flux.norm_dsigma()
    )
    ht = hassell_tao_check(pair, basis)
    print(
        f"{pair.lam:9.4f}   {flux_sq / (2 * pair.lam):14.6f}   "
        f"{mismatch:12.2e}   {ht.ratio:8.4f}"
    )

print()
print("The ratio column stays at or below one: the flux energy is bounded")
print("by lambda^2 ||P_H e||^2 / q_1, and the harmonic projection of an")
print("eigenfunction is far from zero even though its boundary trace vanishes:")
norms = [np.sqrt(np.sum(basis.interior_coeffs(p.e) ** 2)) for p in pairs[:5]]
print("||P_H e|| for the first five eigenfunctions:", np.array2string(np.array(norms), precision=4))
