"""Link variables make the discrete energy gauge invariant.

Run: python3 demos/01_gauge_and_gradient.py
"""

import numpy as np

from glref import EnergyParams, Grid, build_links, energy, gauge_transform, gradient

rng = np.random.default_rng(7)

# A 16x16 square centered at the origin, constant unit field.
grid = Grid.centered(3.0, 3.0, 0.2)
links = build_links(grid, "A0")
params = EnergyParams(0.7, 1.0, "neumann")

u = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
E = energy(u, links, params)
print(f"nodes {grid.shape}, energy {E:.12f}")

# Rotate the phase of u node by node and push the same phase through the links.
phi = rng.uniform(-np.pi, np.pi, grid.shape)
u2, links2 = gauge_transform(u, links, phi)
E2 = energy(u2, links2, params)
print(f"after a random gauge change {E2:.12f}  (drift {abs(E2 - E) / abs(E):.1e})")

# The gradient transforms like u itself.
G, G2 = gradient(u, links, params), gradient(u2, links2, params)
print("gradient covariant:", np.allclose(G2, np.exp(1j * phi) * G, atol=1e-12))

# Directional derivative against a central difference of the energy.
d = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
d /= np.linalg.norm(d)
eps = 1e-4
fd = (energy(u + eps * d, links, params) - energy(u - eps * d, links, params)) / (2 * eps)
an = 2 * grid.h ** 2 * np.real(np.vdot(G, d))
print(f"analytic {an:.10f}  finite difference {fd:.10f}")
