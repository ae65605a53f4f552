"""Constant-field square energies e_D(b, r), e_N(b, r) and the Neumann eigenvalue mu_1(h).

The functional on ``Q_r = (-r/2, r/2)^2`` is

    F(u) = integral of  b |(grad - i A0) u|^2 - |u|^2 + |u|^4 / 2,

with ``A0 = (-y, x) / 2`` (unit field).  Dirichlet energies use ``u = 0``
on the boundary, Neumann energies leave it free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .fieldcore import (
    EnergyParams, EnergyReport, Grid, build_links, kinetic_matrix,
)
from .solver import DEFAULT_MAXITER, DEFAULT_RTOL, minimize, prolong

SNAP_RTOL = 1e-3


@dataclass(frozen=True)
class SquareProblem:
    """Square ``Q_r`` with kinetic coefficient ``b``.

    ``resolution`` is in nodes per unit length and defaults to
    ``max(8, 8 sqrt(b))``; ``levels`` is the number of coarse grids used
    for continuation before the target grid.
    """

    b: float
    r: float
    boundary: str = "dirichlet"
    resolution: Optional[float] = None
    levels: int = 1

    def __post_init__(self):
        if not (np.isfinite(self.b) and self.b > 0):
            raise ValueError(f"b must be positive, got {self.b!r}")
        if not (np.isfinite(self.r) and self.r > 0):
            raise ValueError(f"r must be positive, got {self.r!r}")
        if self.boundary not in ("dirichlet", "neumann"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if self.resolution is not None and self.resolution < min_resolution(self.b):
            raise ValueError(f"resolution {self.resolution} below the minimum "
                             f"{min_resolution(self.b)} for b={self.b}")

    @property
    def h_max(self) -> float:
        res = self.resolution if self.resolution is not None else min_resolution(self.b)
        return 1.0 / res

    def grid(self) -> Grid:
        return Grid.centered(self.r, self.r, self.h_max, multiple=2 ** self.levels)

    def params(self) -> EnergyParams:
        return EnergyParams(self.b, 1.0, self.boundary)


def min_resolution(b) -> float:
    return max(8.0, 8.0 * np.sqrt(b))


# -- initial states --------------------------------------------------------

def _noise(grid, rng):
    return 1e-3 * (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))


def _disc(grid, rng):
    return np.sqrt(rng.random(grid.shape)) * np.exp(2j * np.pi * rng.random(grid.shape))


def _bump(grid, rng):
    X, Y = grid.coords()
    W, H = grid.extent
    return (np.cos(np.pi * X / W) * np.cos(np.pi * Y / H)).astype(complex) + _noise(grid, rng)


def _ones(grid, rng):
    return np.ones(grid.shape, dtype=complex) + _noise(grid, rng)


def square_starts(boundary, seed, n_random=0):
    """Named initializations ``(label, init(grid, rng), seed)`` for the multi-start."""
    starts = [("noise", _noise, seed),
              ("bump" if boundary == "dirichlet" else "ones",
               _bump if boundary == "dirichlet" else _ones, seed),
              ("random", _disc, seed)]
    starts += [(f"random{k}", _disc, seed + k) for k in range(1, n_random + 1)]
    return starts


# -- multilevel multi-start driver -----------------------------------------

def grid_hierarchy(fine: Grid, levels: int):
    grids = [fine]
    for _ in range(levels):
        c = grids[-1].coarsen()
        if c is None or min(c.nodes) < 9:
            break
        grids.append(c)
    return grids[::-1]


def solve_from(init, grids, potential, params, rng, *, rtol=DEFAULT_RTOL,
               maxiter=DEFAULT_MAXITER, label=""):
    """Minimize on each grid of ``grids`` in turn, prolonging between levels."""
    u = None
    total = 0
    wall = 0.0
    for k, g in enumerate(grids):
        links = build_links(g, potential)
        if k == 0:
            u = init(g, rng) if callable(init) else np.asarray(init, dtype=complex)
        else:
            u = prolong(u, links)
        last = k == len(grids) - 1
        u, rep = minimize(u, links, params, rtol=rtol if last else max(rtol, 1e-6),
                          maxiter=maxiter, label=label)
        total += rep.iterations
        wall += rep.wall_time
    rep.iterations = total
    rep.wall_time = wall
    return u, rep


@dataclass
class MultiStartResult:
    u: np.ndarray
    report: EnergyReport
    grid: Grid
    runs: list = field(default_factory=list)

    @property
    def energy(self) -> float:
        return self.report.energy


def run_multistart(grids, potential, params, starts, extra_starts=(), *,
                   rtol=DEFAULT_RTOL, maxiter=DEFAULT_MAXITER) -> MultiStartResult:
    """Best converged result over all starts (best unconverged one if none converged).

    The zero field competes too, so the reported energy is never positive.
    """
    results = []
    for label, init, s in starts:
        rng = np.random.default_rng(s)
        u, rep = solve_from(init, grids, potential, params, rng, rtol=rtol,
                            maxiter=maxiter, label=label)
        results.append((u, rep))
    for label, u0 in extra_starts:
        u0 = np.asarray(u0, dtype=complex)
        if u0.shape != grids[-1].shape:
            raise ValueError(f"extra start {label!r} has shape {u0.shape}, "
                             f"expected {grids[-1].shape}")
        u, rep = solve_from(u0, grids[-1:], potential, params, None, rtol=rtol,
                            maxiter=maxiter, label=label)
        results.append((u, rep))
    conv = [r for r in results if r[1].converged]
    pool = conv if conv else results
    u, rep = min(pool, key=lambda r: r[1].energy)
    if rep.energy > 0:
        # u = 0 is an exact critical point with zero energy
        u = np.zeros(grids[-1].shape, dtype=complex)
        rep = EnergyReport(0.0, 0.0, 0, True, 0.0, 0.0, start="zero")
    return MultiStartResult(u, rep, grids[-1], [r[1].as_dict() for r in results])


def minimize_square(p: SquareProblem, seed: int = 0, *, n_random=0, n_starts=None,
                    extra_starts=(), rtol=DEFAULT_RTOL,
                    maxiter=DEFAULT_MAXITER) -> MultiStartResult:
    """Multi-start minimization of the discrete square functional.

    ``extra_starts`` is a sequence of ``(label, field)`` pairs on the
    target grid, e.g. a Dirichlet minimizer used to seed the Neumann
    problem.  ``n_starts`` keeps only the first few named starts.
    """
    grids = grid_hierarchy(p.grid(), p.levels)
    starts = square_starts(p.boundary, seed, n_random)[:n_starts]
    return run_multistart(grids, "A0", p.params(), starts, extra_starts, rtol=rtol,
                          maxiter=maxiter)


def snap_dirichlet(b, r, energy, tol=SNAP_RTOL) -> float:
    """Reported Dirichlet energy: exactly zero for ``b >= 1`` when within ``tol * r^2``."""
    if b >= 1 and abs(energy) < tol * r * r:
        return 0.0
    return energy


def e_D(b, r, seed=0, **kw) -> float:
    res = minimize_square(SquareProblem(b, r, "dirichlet", kw.pop("resolution", None),
                                        kw.pop("levels", 1)), seed, **kw)
    return snap_dirichlet(b, r, res.energy)


def e_N(b, r, seed=0, *, dirichlet_start=True, **kw) -> float:
    """Neumann energy; by default the Dirichlet minimizer is one of the starts.

    Every discrete Dirichlet field is admissible for the Neumann problem,
    so that start guarantees ``e_N <= e_D`` on the same grid.
    """
    resolution = kw.pop("resolution", None)
    levels = kw.pop("levels", 1)
    extra = []
    if dirichlet_start:
        d = minimize_square(SquareProblem(b, r, "dirichlet", resolution, levels), seed, **kw)
        extra.append(("dirichlet-minimizer", d.u))
    res = minimize_square(SquareProblem(b, r, "neumann", resolution, levels), seed,
                          extra_starts=extra, **kw)
    return res.energy


# -- magnetic Neumann eigenvalue -------------------------------------------

class EigenSolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenProblem:
    """Lowest eigenvalue of ``v -> |(h grad - i A0) v|^2`` on the unit square, Neumann."""

    h_semiclassical: float
    resolution: Optional[float] = None

    def __post_init__(self):
        if not (0 < self.h_semiclassical <= 1):
            raise ValueError(f"h must lie in (0, 1], got {self.h_semiclassical!r}")

    @property
    def nodes_per_unit(self) -> float:
        if self.resolution is not None:
            return self.resolution
        return max(32.0, 16.0 / np.sqrt(self.h_semiclassical))


def magnetic_neumann_matrices(grid: Grid, h: float):
    """Stiffness ``h^2 K(A0 / h)`` and diagonal trapezoid mass matrix on ``grid``."""
    links = build_links(grid, "A0").scaled(1.0 / h)
    K = (h * h) * kinetic_matrix(links)
    M = sp.diags(grid.node_weights().ravel() * grid.h ** 2)
    return K.tocsc(), M.tocsc()


def mu1(e: EigenProblem) -> float:
    """Smallest eigenvalue of the discrete magnetic Neumann form (shift-invert Lanczos)."""
    grid = Grid.centered(1.0, 1.0, 1.0 / e.nodes_per_unit)
    K, M = magnetic_neumann_matrices(grid, e.h_semiclassical)
    try:
        vals, vecs = eigsh(K, k=1, M=M, sigma=0.0, which="LM")
    except Exception as exc:  # ARPACK reports failures through several exception types
        raise EigenSolveError(f"eigensolve failed for h={e.h_semiclassical}: {exc}") from exc
    lam = float(vals[0])
    v = vecs[:, 0]
    resid = np.linalg.norm(K @ v - lam * (M @ v)) / max(np.linalg.norm(M @ v), 1e-300)
    if not (lam > 0) or resid > 1e-6 * max(1.0, lam):
        raise EigenSolveError(f"eigensolve for h={e.h_semiclassical} gave lambda={lam}, "
                              f"residual {resid:.3e}")
    return lam


def aitken_limit(values) -> float:
    """Aitken delta-squared extrapolation of the last three terms of a sequence."""
    x0, x1, x2 = (float(v) for v in values[-3:])
    den = x2 - 2 * x1 + x0
    if den == 0:
        return x2
    return x2 - (x2 - x1) ** 2 / den


def theta1_estimate(hs=(0.2, 0.1, 0.05), resolution=None):
    """Ratios ``mu_1(h) / h`` over ``hs`` and their Aitken-extrapolated limit."""
    ratios = [mu1(EigenProblem(h, resolution)) / h for h in hs]
    return ratios, aitken_limit(ratios)


def empirical_vanishing_frontier(r, b_values, seed=0, tol=SNAP_RTOL, **kw):
    """Smallest sampled ``b`` from which ``e_N(b, r)`` stays within ``tol r^2`` of zero.

    Returns ``(frontier, rows)`` where rows holds ``(b, e_N)`` for every
    sample; ``frontier`` is None when the largest sample is still negative.
    """
    rows = [(float(b), e_N(b, r, seed, **kw)) for b in sorted(b_values)]
    frontier = None
    for b, e in reversed(rows):
        if abs(e) <= tol * r * r:
            frontier = b
        else:
            break
    return frontier, rows
