"""Invariant suites behind ``glref verify``.

Every suite returns a dict with ``suite``, ``passed`` and its measured
numbers, so a report can be written as JSON without post-processing.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from . import coarea
from .fieldcore import EnergyParams, GaugeLinks, Grid, build_links, energy, gauge_transform, gradient
from .gfunc import GTable, integral_g
from .square import (
    SNAP_RTOL, SquareProblem, aitken_limit, e_N, minimize_square, theta1_estimate,
)
from .strip import ETable, sandwich_constants, scaling_ratios, truncation_study

SUITES = ("gauge", "gradient", "inequalities", "lemma24", "eigen", "strip", "thm13",
          "coarea-linear", "coarea-tilted")


def _random_field(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _random_links(rng, grid):
    ny, nx = grid.shape
    return GaugeLinks(grid, rng.uniform(-np.pi, np.pi, (ny, nx - 1)),
                      rng.uniform(-np.pi, np.pi, (ny - 1, nx)), "random")


def gauge(seed=0, trials=100, nodes=16, tol=1e-12):
    """Energy drift under random gauge transforms on ``nodes x nodes`` grids."""
    rng = np.random.default_rng(seed)
    grid = Grid((-1.0, -1.0), (2.0, 2.0), (nodes, nodes))
    worst = 0.0
    worst_grad = 0.0
    for k in range(trials):
        links = [_random_links(rng, grid), build_links(grid, "A0"),
                 build_links(grid, "Avan")][k % 3]
        params = EnergyParams(float(rng.uniform(0.1, 2.0)), float(rng.uniform(0.5, 2.0)),
                              ("neumann", "dirichlet")[k % 2])
        u = _random_field(rng, grid.shape)
        phi = rng.uniform(-4 * np.pi, 4 * np.pi, grid.shape)
        u2, links2 = gauge_transform(u, links, phi)
        e1, e2 = energy(u, links, params), energy(u2, links2, params)
        worst = max(worst, abs(e2 - e1) / max(abs(e1), 1e-300))
        g1, g2 = gradient(u, links, params), gradient(u2, links2, params)
        worst_grad = max(worst_grad, float(np.max(np.abs(g2 - np.exp(1j * phi) * g1)))
                         / max(float(np.max(np.abs(g1))), 1e-300))
    return {"suite": "gauge", "trials": trials, "max_relative_drift": worst,
            "max_gradient_covariance_error": worst_grad,
            "passed": worst <= tol and worst_grad <= 1e-10}


def directional_check(u, d, links, params, eps=0.1):
    """Relative gap between the analytic and central-difference derivative along ``d``.

    The five-point stencil is exact for the quartic ``t -> E(u + t d)``, so
    only rounding remains and ``eps`` need not be small.  A vanishing
    derivative (e.g. at a critical point) is measured against
    ``1e-8 max(1, max |E|)`` over the stencil, the scale below which the
    difference quotient is rounding noise.
    """
    h2 = links.grid.h ** 2
    analytic = 2 * h2 * float(np.real(np.vdot(gradient(u, links, params), d)))
    f = [energy(u + k * eps * d, links, params) for k in (-2, -1, 1, 2)]
    fd = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * eps)
    floor = 1e-8 * max(1.0, max(abs(v) for v in f))
    return abs(analytic - fd) / max(abs(analytic), abs(fd), floor)


GRADIENT_CONFIGS = (("A0", "dirichlet", 1.0), ("A0", "neumann", 1.0),
                    ("Avan", "dirichlet", 0.2 ** (-2 / 3)), ("Avan", "neumann", 1.0),
                    ("random", "neumann", 1.0))


def gradient_suite(seed=0, instances=20, tol=1e-6):
    rng = np.random.default_rng(seed)
    grid = Grid((-2.0, -1.5), (4.0, 3.0), (17, 13))
    rows = []
    for pot, bc, p in GRADIENT_CONFIGS:
        worst = 0.0
        for _ in range(instances):
            links = _random_links(rng, grid) if pot == "random" else build_links(grid, pot)
            params = EnergyParams(float(rng.uniform(0.2, 2.0)), p, bc)
            u = _random_field(rng, grid.shape)
            d = _random_field(rng, grid.shape)
            if bc == "dirichlet":
                u[grid.boundary_mask()] = 0
                d[grid.boundary_mask()] = 0
            d /= np.linalg.norm(d)
            worst = max(worst, directional_check(u, d, links, params))
        rows.append({"potential": pot, "boundary": bc, "max_relative_error": worst})
    return {"suite": "gradient", "instances": instances, "configs": rows,
            "passed": all(r["max_relative_error"] < tol for r in rows)}


def inequalities(lattice_b, lattice_r, seed=0, n_starts=None, sup_tol=1.005):
    """``e_N <= 0``, ``e_D <= 0``, ``e_D >= e_N`` and ``sup |u| <= sup_tol`` on a (b, r) lattice."""
    rows = []
    for b in lattice_b:
        for r in lattice_r:
            d = minimize_square(SquareProblem(b, r, "dirichlet"), seed, n_starts=n_starts)
            n = minimize_square(SquareProblem(b, r, "neumann"), seed, n_starts=n_starts,
                                extra_starts=[("dirichlet-minimizer", d.u)])
            rows.append({"b": b, "r": r, "e_D": d.energy, "e_N": n.energy,
                         "sup_D": d.report.sup_modulus, "sup_N": n.report.sup_modulus,
                         "converged": d.report.converged and n.report.converged,
                         "eq21_ratio": (d.energy - n.energy) / (r * np.sqrt(b))})
    ok = all(r["e_N"] <= 0 and r["e_D"] <= 0 and r["e_D"] >= r["e_N"]
             and max(r["sup_D"], r["sup_N"]) <= sup_tol and r["converged"] for r in rows)
    return {"suite": "inequalities", "rows": rows,
            "max_eq21_ratio": max(r["eq21_ratio"] for r in rows), "passed": ok}


def lemma24(frontier_b, r=8.0, seed=0, n_starts=None):
    """``e_N(b, r)`` along ``frontier_b``; passes when ``e_N(8, 8)`` vanishes within ``1e-3 r^2``."""
    rows = [{"b": float(b), "e_N": e_N(b, r, seed, n_starts=n_starts)} for b in sorted(frontier_b)]
    frontier = None
    for row in reversed(rows):
        if abs(row["e_N"]) <= SNAP_RTOL * r * r:
            frontier = row["b"]
        else:
            break
    at8 = [row["e_N"] for row in rows if row["b"] == 8.0]
    e88 = at8[0] if at8 else e_N(8.0, 8.0, seed, n_starts=n_starts)
    return {"suite": "lemma24", "r": r, "rows": rows, "e_N_8_8": e88,
            "empirical_frontier": frontier, "passed": abs(e88) <= SNAP_RTOL * 64.0}


def dense_mu1_oracle(h, n=50):
    """Lowest Neumann eigenvalue of ``|(h grad - i A0) v|^2`` on the unit square, dense.

    Assembled edge by edge with exact link integrals of ``A0`` and solved
    with a dense generalized Hermitian eigensolver.
    """
    dx = 1.0 / (n - 1)
    xs = -0.5 + dx * np.arange(n)
    N = n * n
    K = np.zeros((N, N), dtype=complex)
    wx = np.ones(n)
    wx[[0, -1]] = 0.5

    def add_edge(a, b_, phase, w):
        # w |exp(i phase) v_b - v_a|^2 / dx^2 * h^2 * dx^2
        K[a, a] += w * h * h
        K[b_, b_] += w * h * h
        K[a, b_] -= w * h * h * np.exp(1j * phase)
        K[b_, a] -= w * h * h * np.exp(-1j * phase)

    for j in range(n):
        for i in range(n):
            a = j * n + i
            if i + 1 < n:
                # integral of A0_x = -y/2 along the edge, over h
                add_edge(a, a + 1, -(-xs[j] / 2) * dx / h, wx[j])
            if j + 1 < n:
                add_edge(a, a + n, -(xs[i] / 2) * dx / h, wx[i])
    M = np.diag(np.outer(wx, wx).ravel() * dx * dx)
    return float(scipy.linalg.eigh(K, M, eigvals_only=True, subset_by_index=[0, 0])[0])


def eigen(hs=(0.2, 0.1, 0.05), oracle_h=0.02, oracle_n=50):
    ratios, limit = theta1_estimate(tuple(hs))
    oracle = dense_mu1_oracle(oracle_h, oracle_n) / oracle_h
    order = np.argsort(hs)[::-1]  # decreasing h
    seq = [ratios[i] for i in order]
    monotone = all(a < b for a, b in zip(seq, seq[1:]))
    rel = abs(limit - oracle) / oracle
    return {"suite": "eigen", "h": list(hs), "ratios": ratios, "limit": limit,
            "oracle_h": oracle_h, "oracle_ratio": oracle, "relative_gap": rel,
            "decreasing_in_h": monotone,
            "passed": monotone and 0 < limit < 1 and rel < 0.05}


def strip_suite(etable: ETable, L_doubling=(0.2,), seed=0, n_starts=None, sup_tol=1.005):
    rows = []
    for s in etable.samples:
        y = [e / R for e, R in zip(s.e_gs, s.R_list)]
        rows.append({"L": s.L, "E_est": s.E_est, "min_e_over_R": min(y),
                     "bound_ok": all(s.E_est <= v + 1e-6 for v in y),
                     "residual_r23": s.residual_r23, "spread": s.spread,
                     "shape_ok": s.residual_r23 < 0.05 * s.spread if s.spread > 0 else True,
                     "sup_modulus": max(d["sup_modulus"] for d in s.runs),
                     "tail_fraction": max(d["tail_fraction"] for d in s.runs),
                     "tainted": s.tainted})
    trunc = [truncation_study(L, 4.0, seed=seed, n_starts=n_starts) for L in L_doubling]
    ok = (all(r["bound_ok"] and r["shape_ok"] and r["sup_modulus"] <= sup_tol
              and not r["tainted"] for r in rows)
          and all(t["relative_change"] < 1e-4 and t["converged"] for t in trunc))
    return {"suite": "strip", "rows": rows, "truncation": trunc, "passed": ok}


def thm13(gtable: GTable, etable: ETable):
    I, I_err = integral_g(gtable)
    rho = scaling_ratios(etable, I)
    dev = [abs(r - 1) for _, r in rho]
    in_band = all(0.5 < r < 1.5 for _, r in rho)
    decreasing = all(a > b for a, b in zip(dev, dev[1:]))
    C1, C2 = sandwich_constants(etable, I)
    return {"suite": "thm13", "I": I, "I_err": I_err,
            "rho": [{"L": L, "rho": r} for L, r in rho],
            "sandwich_C1": C1, "sandwich_C2": C2, "in_band": in_band,
            "deviation_decreasing": decreasing, "passed": in_band and decreasing and len(rho) >= 2}


def coarea_linear(gtable: GTable, kappas=(100.0, 1000.0), b_scale=0.575, tol=1e-3):
    spec = coarea.linear_field()
    rep = coarea.verify_coarea(spec, gtable, "asymptotic", kappas,
                               b_of_kappa=lambda k: coarea.default_b_of_kappa(k, b_scale),
                               require_decrease=False)
    worst = max(r["relative"] for r in rep["rows"])
    scaled = [r["lhs_scaled"] for r in rep["rows"]]
    rep.update({"suite": "coarea-linear", "max_relative": worst,
                "lhs_scaled_spread": float(max(scaled) - min(scaled)),
                "passed": worst < tol})
    return rep


def coarea_tilted(gtable: GTable, etable: ETable, field=None, kappas=(100.0, 1000.0, 10000.0),
                  b_scale=0.575):
    spec = coarea.field_from_descriptor(field or {"builtin": "tilted"})
    rep = coarea.verify_coarea(spec, gtable, etable, kappas,
                               b_of_kappa=lambda k: coarea.default_b_of_kappa(k, b_scale))
    rep["suite"] = "coarea-tilted"
    return rep
