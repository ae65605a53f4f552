"""Lowest magnetic Neumann eigenvalue on the unit square.

mu1(h)/h climbs toward a constant below 1 as h shrinks; Aitken's
extrapolation estimates the limit from three values.

Run: python3 demos/05_eigenvalue.py
"""

from glref import theta1_estimate
from glref.verify import dense_mu1_oracle

hs = (0.2, 0.1, 0.05)
ratios, limit = theta1_estimate(hs)
for h, q in zip(hs, ratios):
    print(f"h = {h:5.3f}: mu1/h = {q:.5f}")
print(f"extrapolated limit {limit:.4f}")

# Independent check: dense eigensolve at a smaller h.
print(f"dense solve at h = 0.02: mu1/h = {dense_mu1_oracle(0.02) / 0.02:.4f}")
