"""Surface energy E(L) along a vanishing-field strip.

The ground state hugs the line y = 0, so the strip energy grows linearly
in its length R plus an end cost.  The fitted slope is E(L).

Run: python3 demos/03_strip_energy.py   (a few minutes)
"""

import numpy as np

from glref import StripProblem, minimize_strip
from glref.strip import E_asymptotic, fit_strip

L = 0.2
R_list = np.array([4.0, 8.0, 12.0])
energies = []
for R in R_list:
    res = minimize_strip(StripProblem(L, R), n_starts=2)
    energies.append(res.energy)
    print(f"R = {R:4.1f}: e = {res.energy:.5f}, e/R = {res.energy / R:.5f}, "
          f"sup|u| = {res.report.sup_modulus:.4f}")

fit = fit_strip(R_list, np.array(energies))
print(f"E({L}) ~ {fit['E']:.5f}  (end cost a = {fit['a']:.3f}, c = {fit['c']:.3f})")
print(f"pure R^(-2/3) fit: E = {fit['E_r23']:.5f}, "
      f"residual {fit['residual_r23']:.3f} of spread {fit['spread']:.3f}")

# Leading-order prediction with the bulk integral I ~ -0.150.
I = -0.150
print(f"2 I L^(-4/3) = {float(E_asymptotic(I)(L)):.5f}")
