"""From square energies to the bulk density g(b) and its integral.

The Dirichlet energy per area e_D(b, r)/r^2 approaches g(b) from above
like c sqrt(b)/r.  Three square sizes are enough to read off the limit.

Run: python3 demos/02_bulk_density.py   (about a minute)
"""

import numpy as np

from glref import e_D, integral_g, tabulate_g
from glref.gfunc import fit_bulk, g_interp

b = 0.5
r_list = np.array([6.0, 9.0, 12.0])
energies = np.array([e_D(b, r, n_starts=2) for r in r_list])
for r, e in zip(r_list, energies):
    print(f"b = {b}, r = {r:4.1f}: e_D/r^2 = {e / r**2:.5f}")
g, c, resid = fit_bulk(b, r_list, energies)
print(f"fit: g({b}) ~ {g:.5f}, c = {c:.3f}, residual {resid:.1e}")

# Above b = 1 the zero field wins and nothing needs solving.
print("e_D(1.5, 6) =", e_D(1.5, 6.0, n_starts=2))

# A coarse table over [0, 1]; the interpolant is pinned to -1/2 at b = 0.
grid = [round(0.1 * k, 10) for k in range(1, 11)]
table = tabulate_g(grid, (6.0, 9.0, 12.0), n_starts=2,
                   progress=lambda i, n: print(f"  row {i}/{n}", end="\r"))
print()
for s in table.samples:
    print(f"  g({s.b:.1f}) = {s.g_est:+.5f}   bracket [{s.lower:+.4f}, {s.upper:+.4f}]")
print("g(0) =", g_interp(table, 0.0))
try:
    I, err = integral_g(table)
    print(f"I = {I:.5f} +- {err:.3f}")
except ValueError as exc:
    # step 0.1 is too coarse for the quadrature contract
    print("integral refused:", exc)
    b = np.concatenate([[0.0], [s.b for s in table.samples]])
    print(f"rough trapezoid anyway: {np.trapezoid([g_interp(table, x) for x in b], b):.4f}"
          "  (the --fast table gives -0.1537)")
