"""Vanishing-field strip energies e_gs(L; R) and the surface energy E(L).

The functional on ``S_R = (-R/2, R/2) x R`` is

    E_{L,R}(u) = integral of |(grad - i A_van) u|^2 - L^(-2/3) |u|^2 + L^(-2/3) |u|^4 / 2

with ``A_van = (-y^2 / 2, 0)``, whose field ``B = y`` vanishes on the
x-axis.  The strip is truncated to ``|y| < T`` with ``u = 0`` on all four
sides; ``E(L)`` is the ``R -> infinity`` limit of ``e_gs(L; R) / R``,
extrapolated with ``E + a / R + c R^(-2/3)`` (end cost plus bulk defect).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fieldcore import EnergyParams, Grid, energy as discrete_energy, build_links, weighted_mass
from .parallel import pmap
from .solver import DEFAULT_MAXITER, DEFAULT_RTOL
from .square import _bump, _disc, _noise, grid_hierarchy, run_multistart

TAIL_FRACTION_MAX = 1e-6
ETABLE_CSV_COLUMNS = ("L", "E_est", "err_est", "upper", "c_fit", "R_max", "tainted")


class FitError(ValueError):
    pass


def default_half_height(L) -> float:
    return max(4.0, 2.0 * L ** (-2.0 / 3.0))


@dataclass(frozen=True)
class StripProblem:
    """Truncated strip ``(-R/2, R/2) x (-T, T)``.

    ``T`` defaults to ``max(4, 2 L^(-2/3))``; ``resolution`` (nodes per
    unit length) defaults to ``8 max(1, sqrt(T))`` so the magnetic length
    at ``|y| = T`` is resolved.
    """

    L: float
    R: float
    T: Optional[float] = None
    resolution: Optional[float] = None
    levels: int = 3

    def __post_init__(self):
        if not (np.isfinite(self.L) and self.L > 0):
            raise ValueError(f"L must be positive, got {self.L!r}")
        if not (self.R >= 4):
            raise ValueError(f"R must be at least 4, got {self.R!r}")
        if self.T is not None and self.T < default_half_height(self.L) - 1e-12:
            raise ValueError(f"T={self.T} below max(4, 2 L^(-2/3)) = {default_half_height(self.L)}")

    @property
    def half_height(self) -> float:
        return default_half_height(self.L) if self.T is None else float(self.T)

    @property
    def h_max(self) -> float:
        if self.resolution is not None:
            return 1.0 / self.resolution
        return 1.0 / (8.0 * max(1.0, np.sqrt(self.half_height)))

    @property
    def potential_coefficient(self) -> float:
        return self.L ** (-2.0 / 3.0)

    def grid(self) -> Grid:
        return Grid.centered(self.R, 2 * self.half_height, self.h_max, multiple=2 ** self.levels)

    def params(self) -> EnergyParams:
        return EnergyParams(1.0, self.potential_coefficient, "dirichlet")


def _gaussian_band(L):
    width = L ** (-2.0 / 3.0)

    def init(grid, rng):
        _, Y = grid.coords()
        return np.exp(-(Y / width) ** 2).astype(complex) + _noise(grid, rng)
    return init


def strip_starts(L, seed, n_random=0):
    starts = [("band", _gaussian_band(L), seed), ("noise", _noise, seed),
              ("bump", _bump, seed), ("random", _disc, seed)]
    starts += [(f"random{k}", _disc, seed + k) for k in range(1, n_random + 1)]
    return starts


@dataclass
class StripResult:
    u: np.ndarray
    grid: Grid
    problem: StripProblem
    report: object
    runs: list = field(default_factory=list)

    @property
    def energy(self) -> float:
        return self.report.energy

    @property
    def mass(self) -> float:
        return weighted_mass(self.u, self.grid)

    @property
    def mass_ratio(self) -> float:
        """``integral |u|^2 / (L^(-2/3) R)``, bounded uniformly in L and R."""
        return self.mass / (self.problem.potential_coefficient * self.problem.R)

    @property
    def tail_fraction(self) -> float:
        """Share of the mass in ``|y| > T/2``."""
        _, Y = self.grid.coords()
        w = self.grid.node_weights()
        rho = w * np.abs(self.u) ** 2
        total = float(np.sum(rho))
        if total == 0:
            return 0.0
        return float(np.sum(rho[np.abs(Y) > self.problem.half_height / 2])) / total

    @property
    def truncation_flag(self) -> bool:
        return self.tail_fraction > TAIL_FRACTION_MAX

    def diagnostics(self) -> dict:
        return {"L": self.problem.L, "R": self.problem.R, "T": self.problem.half_height,
                "nodes": list(self.grid.nodes), "h": self.grid.h,
                "energy": self.energy, "converged": self.report.converged,
                "grad_norm": self.report.grad_norm, "iterations": self.report.iterations,
                "sup_modulus": self.report.sup_modulus, "mass_ratio": self.mass_ratio,
                "tail_fraction": self.tail_fraction, "truncation_flag": self.truncation_flag,
                "start": self.report.start, "runs": self.runs}


def minimize_strip(p: StripProblem, seed: int = 0, *, n_random=0, n_starts=None,
                   extra_starts=(), rtol=DEFAULT_RTOL, maxiter=DEFAULT_MAXITER) -> StripResult:
    grids = grid_hierarchy(p.grid(), p.levels)
    starts = strip_starts(p.L, seed, n_random)[:n_starts]
    res = run_multistart(grids, "Avan", p.params(), starts, extra_starts, rtol=rtol,
                         maxiter=maxiter)
    return StripResult(res.u, res.grid, p, res.report, res.runs)


def e_gs(L, R, seed=0, **kw) -> float:
    return minimize_strip(StripProblem(L, R, kw.pop("T", None), kw.pop("resolution", None),
                                       kw.pop("levels", 3)), seed, **kw).energy


def reflect_y(u):
    """``u(x, -y)``, a symmetry of the strip energy on a grid symmetric in y."""
    return np.asarray(u)[::-1, :]


def conj_reflect_x(u):
    """``conj(u(-x, y))``, a symmetry of the strip energy on a grid symmetric in x."""
    return np.conj(np.asarray(u)[:, ::-1])


def symmetry_defects(result: StripResult) -> dict:
    """Energy changes under both discrete symmetries of the strip functional."""
    links = build_links(result.grid, "Avan")
    params = result.problem.params()
    E = discrete_energy(result.u, links, params)
    return {"reflect_y": abs(discrete_energy(reflect_y(result.u), links, params) - E),
            "conj_reflect_x": abs(discrete_energy(conj_reflect_x(result.u), links, params) - E),
            "energy": E}


# -- extrapolation in R ----------------------------------------------------

def _lstsq(columns, y):
    A = np.column_stack(columns)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef, float(np.max(np.abs(A @ coef - y)))


def fit_strip(R_list, energies):
    """Fit ``e / R = E + a / R + c R^(-2/3)`` with ``a, c >= 0``.

    ``a / R`` is the cost of the two Dirichlet ends, ``c R^(-2/3)`` the
    slower decay allowed by the upper bound.  All sign-feasible active
    sets are tried and the one with the smallest residual is kept.  The
    intercept is capped by ``min e/R``, since every ``e_gs(L; R) / R`` is
    an upper bound for ``E(L)``.

    The returned dict also carries the plain ``E + c R^(-2/3)`` fit
    (``E_r23``, ``residual_r23``) used as a shape check.
    """
    R = np.asarray(R_list, dtype=float)
    y = np.asarray(energies, dtype=float) / R
    if len(R) < 2:
        raise FitError("need at least two valid R values")
    one, inv, r23 = np.ones_like(R), 1.0 / R, R ** (-2.0 / 3.0)
    best = None
    for use_a, use_c in ((True, True), (True, False), (False, True), (False, False)):
        cols = [one] + [inv] * use_a + [r23] * use_c
        if len(cols) > len(R):
            continue
        coef, resid = _lstsq(cols, y)
        a = coef[1] if use_a else 0.0
        c = coef[-1] if use_c else 0.0
        if a < 0 or c < 0:
            continue
        if best is None or resid < best[3] - 1e-14:
            best = (float(coef[0]), float(a), float(c), resid)
    E, a, c, _ = best
    upper = float(np.min(y))
    E = min(E, upper)
    resid = float(np.max(np.abs(y - (E + a * inv + c * r23))))

    (E23, c23), resid23 = _lstsq([one, r23], y)
    if c23 < 0:
        E23, c23 = float(np.mean(y)), 0.0
    E23 = min(float(E23), upper)
    resid23 = float(np.max(np.abs(y - (E23 + c23 * r23))))
    spread = float(np.max(y) - np.min(y))
    return {"E": E, "a": a, "c": c, "residual": resid, "spread": spread, "upper": upper,
            "err": resid + 0.5 * (upper - E),
            "E_r23": E23, "c_r23": float(c23), "residual_r23": resid23}


@dataclass
class ESample:
    L: float
    R_list: list
    e_gs: list
    E_est: float
    err_est: float
    upper: float
    c_fit: float
    residual: float
    spread: float
    a_fit: float = 0.0
    E_r23: float = 0.0
    residual_r23: float = 0.0
    tainted: bool = False
    runs: list = field(default_factory=list)


@dataclass
class ETable:
    samples: list
    config: dict = field(default_factory=dict)

    def coverage(self):
        Ls = [s.L for s in self.samples if not s.tainted]
        return (min(Ls), max(Ls)) if Ls else (None, None)


def _strip_task(args):
    L, R, seed, opts = args
    res = minimize_strip(StripProblem(L, R, opts.get("T"), opts.get("resolution"),
                                      opts.get("levels", 3)),
                         seed, n_random=opts.get("n_random", 0),
                         n_starts=opts.get("n_starts"))
    d = res.diagnostics()
    return d


def estimate_E(L, R_list=(4.0, 8.0, 12.0), *, seed=0, n_random=0, n_starts=None,
               resolution=None, levels=3, jobs=1, progress=None):
    """Extrapolated ``E(L)`` from strips of widths ``R_list``; returns ``(E_est, err_est, sample)``."""
    R_list = [float(R) for R in R_list]
    if len(R_list) < 3 or R_list != sorted(R_list) or R_list[0] < 4:
        raise ValueError("R_list needs at least 3 increasing values, each >= 4")
    opts = {"resolution": resolution, "levels": levels, "n_random": n_random,
            "n_starts": n_starts}
    runs = pmap(_strip_task, [(L, R, seed, opts) for R in R_list], jobs=jobs, progress=progress)
    s = _sample_from_runs(L, runs)
    return s.E_est, s.err_est, s


def _sample_from_runs(L, runs):
    good = [d for d in runs if d["converged"]]
    fit = fit_strip([d["R"] for d in good], [d["energy"] for d in good])
    return ESample(L=L, R_list=[d["R"] for d in runs], e_gs=[d["energy"] for d in runs],
                   E_est=fit["E"], err_est=fit["err"], upper=fit["upper"], c_fit=fit["c"],
                   residual=fit["residual"], spread=fit["spread"], a_fit=fit["a"],
                   E_r23=fit["E_r23"], residual_r23=fit["residual_r23"],
                   tainted=len(good) < len(runs), runs=runs)


def tabulate_E(L_list, R_list=(4.0, 8.0, 12.0), *, seed=0, n_random=0, n_starts=None,
               resolution=None, levels=3, jobs=1, progress=None) -> ETable:
    L_list = [float(L) for L in L_list]
    R_list = [float(R) for R in R_list]
    if len(R_list) < 3 or R_list != sorted(R_list) or R_list[0] < 4:
        raise ValueError("R_list needs at least 3 increasing values, each >= 4")
    opts = {"resolution": resolution, "levels": levels, "n_random": n_random,
            "n_starts": n_starts}
    tasks = [(L, R, seed, opts) for L in L_list for R in R_list]
    out = pmap(_strip_task, tasks, jobs=jobs, progress=progress)
    samples = []
    for L in L_list:
        runs = [d for d in out if d["L"] == L]
        samples.append(_sample_from_runs(L, runs))
    config = {"L_list": L_list, "R_list": R_list, "seed": seed, "n_random": n_random,
              "n_starts": n_starts, "resolution": resolution, "levels": levels}
    return ETable(samples, config)


def truncation_study(L, R, *, seed=0, n_random=0, n_starts=None, resolution=None, levels=3):
    """Energies with half-height ``T`` and ``2T`` on the same spacing; returns the relative change."""
    base = StripProblem(L, R, None, resolution, levels)
    res = 1.0 / base.h_max
    r1 = minimize_strip(StripProblem(L, R, base.half_height, res, levels), seed,
                        n_random=n_random, n_starts=n_starts)
    r2 = minimize_strip(StripProblem(L, R, 2 * base.half_height, res, levels), seed,
                        n_random=n_random, n_starts=n_starts)
    rel = abs(r2.energy - r1.energy) / max(abs(r1.energy), 1e-300)
    return {"T": base.half_height, "energy_T": r1.energy, "energy_2T": r2.energy,
            "relative_change": rel, "tail_fraction_T": r1.tail_fraction,
            "converged": r1.report.converged and r2.report.converged}


# -- E(L) as a function ----------------------------------------------------

def E_from_table(table: ETable, L):
    """Interpolate ``L^(4/3) E(L)`` linearly in ``log L`` between tabulated points."""
    pts = sorted((s.L, s.E_est) for s in table.samples if not s.tainted)
    if not pts:
        raise ValueError("E table has no valid samples")
    Ls = np.array([p[0] for p in pts])
    scaled = np.array([p[1] * p[0] ** (4.0 / 3.0) for p in pts])
    L = np.asarray(L, dtype=float)
    lo, hi = Ls[0] * (1 - 1e-12), Ls[-1] * (1 + 1e-12)
    if np.any(L < lo) or np.any(L > hi):
        raise ValueError(f"L outside table coverage [{Ls[0]}, {Ls[-1]}]")
    if len(Ls) == 1:
        return scaled[0] * L ** (-4.0 / 3.0)
    return np.interp(np.log(L), np.log(Ls), scaled) * L ** (-4.0 / 3.0)


def E_asymptotic(I):
    """Leading-order surrogate ``E(L) = 2 L^(-4/3) I``."""
    def E(L):
        return 2.0 * np.asarray(L, dtype=float) ** (-4.0 / 3.0) * I
    return E


def scaling_ratios(table: ETable, I):
    """``rho(L) = E_est(L) L^(4/3) / (2 I)`` for each clean sample, sorted by decreasing L."""
    rows = sorted(((s.L, s.E_est * s.L ** (4.0 / 3.0) / (2.0 * I))
                   for s in table.samples if not s.tainted), reverse=True)
    return rows


def sandwich_constants(table: ETable, I):
    """Smallest ``C1, C2 >= 0`` with ``2L^(-4/3) I - C1/L <= E_est <= 2L^(-4/3) I + C2 L^(-1/3)``."""
    C1 = C2 = 0.0
    for s in table.samples:
        if s.tainted:
            continue
        lead = 2.0 * s.L ** (-4.0 / 3.0) * I
        C1 = max(C1, (lead - s.E_est) * s.L)
        C2 = max(C2, (s.E_est - lead) * s.L ** (1.0 / 3.0))
    return C1, C2


# -- serialization ---------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def etable_to_csv(table: ETable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ETABLE_CSV_COLUMNS)
    for s in table.samples:
        w.writerow([_fmt(s.L), _fmt(s.E_est), _fmt(s.err_est), _fmt(s.upper), _fmt(s.c_fit),
                    _fmt(max(s.R_list)), int(bool(s.tainted))])
    return buf.getvalue()


def etable_from_csv(text: str) -> ETable:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    samples = [ESample(L=float(r["L"]), R_list=[float(r["R_max"])], e_gs=[],
                       E_est=float(r["E_est"]), err_est=float(r["err_est"]),
                       upper=float(r["upper"]), c_fit=float(r["c_fit"]), residual=0.0,
                       spread=0.0, tainted=bool(int(r["tainted"])))
               for r in rows]
    return ETable(samples)


def etable_to_json(table: ETable, extra=None) -> str:
    doc = {"kind": "ETable", "config": table.config,
           "samples": [asdict(s) for s in table.samples]}
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=1, sort_keys=True)


def etable_from_json(text: str) -> ETable:
    doc = json.loads(text)
    return ETable([ESample(**s) for s in doc["samples"]], doc.get("config", {}))
