"""Regenerate the frozen disk eigenvalue table and check it against the
copy shipped inside the package.

The table freezes the closed-form eigenvalues used by the verification
suites: biharmonic Steklov (2k + 2)/R, Dirichlet-to-Neumann k/R, and
Dirichlet Laplacian (j_{k,m}/R)^2 with Bessel zeros located by
bracketing and bisection.
"""

import os
import sys

from steklovsvd.analytic_disk import build_oracle_table, load_oracle_table, oracle_table_csv

rows = build_oracle_table()
csv_text = oracle_table_csv(rows)

out = "demos/output/disk_oracle.csv"
os.makedirs(os.path.dirname(out), exist_ok=True)
with open(out, "w") as fh:
    fh.write(csv_text)
print(f"{len(rows)} rows written to {out}")

frozen = load_oracle_table()
if frozen == rows:
    print("frozen package table matches the regeneration bit for bit")
else:
    print("MISMATCH against the frozen package table", file=sys.stderr)
    sys.exit(1)
