"""Tabulation, interpolation and integration of the bulk energy density g(b).

``g(b)`` is the large-square limit of ``e_D(b, r) / r^2``.  For each
``b < 1`` the Dirichlet energies at several side lengths are fitted by
``g + c sqrt(b) / r`` with ``c >= 0``; for ``b >= 1`` the value is
exactly zero.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .parallel import pmap
from .square import SquareProblem, minimize_square

CSV_COLUMNS = ("b", "g_est", "upper", "lower", "r_max", "tainted")


class TaintedTableError(ValueError):
    """The table has unusable samples inside the integration range."""


def default_b_grid():
    fine = np.round(np.arange(1, 9) * 0.025, 10)
    coarse = np.round(0.2 + np.arange(1, 17) * 0.05, 10)
    return [float(b) for b in np.concatenate([fine, coarse])]


DEFAULT_R_LIST = (6.0, 9.0, 12.0)


@dataclass
class GSample:
    b: float
    g_est: float
    upper: float
    lower: float
    r_max: float
    tainted: bool = False
    c_fit: float = 0.0
    r_list: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    residual: float = 0.0
    snapped: bool = False
    raw_check: Optional[float] = None
    runs: list = field(default_factory=list)


@dataclass
class GTable:
    samples: list
    r_list: list
    C_fit: float = 0.0
    config: dict = field(default_factory=dict)

    def nodes(self, allow_gaps=True):
        """Interpolation nodes on ``[0, 1]``: the anchor ``(0, -1/2)`` plus clean samples.

        Node values are made nondecreasing by isotonic least squares and
        clamped to ``[-1/2, 0]``; ``(1, 0)`` is always a node.
        """
        pts = {0.0: -0.5, 1.0: 0.0}
        for s in self.samples:
            if s.tainted:
                if not allow_gaps and s.b <= 1.0:
                    raise TaintedTableError(f"tainted sample at b={s.b}")
                continue
            if 0 < s.b < 1:
                pts[s.b] = s.g_est
        b = np.array(sorted(pts))
        g = np.clip(isotonic([pts[x] for x in b]), -0.5, 0.0)
        return b, g

    def grid_spacing(self) -> float:
        b, _ = self.nodes()
        return float(np.max(np.diff(b)))


def isotonic(y):
    """Nondecreasing least-squares fit (pool adjacent violators)."""
    blocks = []  # (mean, weight)
    for v in y:
        blocks.append([float(v), 1])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            m2, w2 = blocks.pop()
            m1, w1 = blocks.pop()
            blocks.append([(m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2])
    out = []
    for m, w in blocks:
        out.extend([m] * w)
    return np.array(out)


def fit_bulk(b, r_list, energies):
    """Intercept ``g`` and slope ``c >= 0`` of ``e / r^2 = g + c sqrt(b) / r``.

    The intercept is capped by the smallest sampled density, since every
    ``e_D(b, r) / r^2`` is an upper bound for ``g(b)``.
    Returns ``(g, c, max_abs_residual)``.
    """
    r = np.asarray(r_list, dtype=float)
    y = np.asarray(energies, dtype=float) / r ** 2
    x = np.sqrt(b) / r
    A = np.column_stack([np.ones_like(x), x])
    (g, c), *_ = np.linalg.lstsq(A, y, rcond=None)
    if c < 0:
        c, g = 0.0, float(np.mean(y))
    g = min(float(g), float(np.min(y)))
    resid = float(np.max(np.abs(y - (g + c * x))))
    return g, float(c), resid


def _dirichlet_task(args):
    b, r, seed, opts = args
    res = minimize_square(SquareProblem(b, r, "dirichlet", opts.get("resolution"),
                                        opts.get("levels", 1)),
                          seed, n_random=opts.get("n_random", 0),
                          n_starts=opts.get("n_starts"))
    return {"b": b, "r": r, "energy": res.energy, "converged": res.report.converged,
            "sup_modulus": res.report.sup_modulus, "runs": res.runs}


def tabulate_g(b_grid: Optional[Sequence[float]] = None, r_list: Sequence[float] = DEFAULT_R_LIST,
               *, seed=0, n_random=0, n_starts=None, resolution=None, levels=1,
               check_snapped=False,
               jobs=1, progress=None) -> GTable:
    """Tabulate ``g`` on ``b_grid`` from Dirichlet energies on squares of sides ``r_list``.

    ``check_snapped`` also runs the solver at ``r_max`` for ``b >= 1`` and
    stores ``e_D / r^2`` in ``raw_check`` (the reported value stays 0).
    """
    b_grid = default_b_grid() if b_grid is None else [float(b) for b in b_grid]
    if any(b <= 0 for b in b_grid):
        raise ValueError("b values must be positive")
    if list(b_grid) != sorted(b_grid):
        raise ValueError("b_grid must be sorted")
    r_list = [float(r) for r in r_list]
    if len(r_list) < 3 or r_list != sorted(r_list) or r_list[0] < 4:
        raise ValueError("r_list needs at least 3 increasing values, each >= 4")
    r_max = r_list[-1]
    opts = {"resolution": resolution, "levels": levels, "n_random": n_random,
            "n_starts": n_starts}
    tasks = [(b, r, seed, opts) for b in b_grid if b < 1 for r in r_list]
    if check_snapped:
        tasks += [(b, r_max, seed, opts) for b in b_grid if b >= 1]
    out = pmap(_dirichlet_task, tasks, jobs=jobs, progress=progress)
    by_key = {(o["b"], o["r"]): o for o in out}

    samples = []
    for b in b_grid:
        if b >= 1:
            raw = by_key.get((b, r_max))
            samples.append(GSample(
                b=b, g_est=0.0, upper=0.0, lower=0.0, r_max=r_max, snapped=True,
                raw_check=None if raw is None else raw["energy"] / r_max ** 2,
                tainted=bool(raw is not None and not raw["converged"]),
                runs=[] if raw is None else raw["runs"]))
            continue
        rows = [by_key[(b, r)] for r in r_list]
        energies = [o["energy"] for o in rows]
        g, c, resid = fit_bulk(b, r_list, energies)
        samples.append(GSample(
            b=b, g_est=g, upper=energies[-1] / r_max ** 2, lower=0.0, r_max=r_max,
            tainted=not all(o["converged"] for o in rows), c_fit=c, r_list=r_list,
            energies=energies, residual=resid,
            runs=[{"r": o["r"], "sup_modulus": o["sup_modulus"], "runs": o["runs"]}
                  for o in rows]))
    C = max([s.c_fit for s in samples if not s.snapped], default=0.0)
    for s in samples:
        if not s.snapped:
            s.lower = float(min(s.upper - C * np.sqrt(s.b) / s.r_max, s.g_est))
    config = {"b_grid": b_grid, "r_list": r_list, "seed": seed, "n_random": n_random,
              "n_starts": n_starts,
              "resolution": resolution, "levels": levels, "check_snapped": check_snapped}
    return GTable(samples, r_list, C, config)


def g_interp(table: GTable, b) -> float:
    """Monotone piecewise-linear ``g``: ``-1/2`` at 0, zero from ``b = 1`` on."""
    if b < 0:
        raise ValueError("b must be nonnegative")
    if b >= 1:
        return 0.0
    nb, ng = table.nodes()
    return float(np.clip(np.interp(b, nb, ng), -0.5, 0.0))


def g_interp_array(table: GTable, b):
    nb, ng = table.nodes()
    b = np.asarray(b, dtype=float)
    return np.where(b >= 1, 0.0, np.clip(np.interp(b, nb, ng), -0.5, 0.0))


def integral_g(table: GTable, allow_gaps=False):
    """``I = integral_0^1 g`` and an error estimate.

    The trapezoid rule on the table nodes is the exact integral of the
    interpolant.  The error estimate adds the Richardson difference
    against every-other-node quadrature to the mean half-width of the
    ``[lower, upper]`` brackets.
    """
    b, g = table.nodes(allow_gaps=allow_gaps)
    if np.max(np.diff(b)) > 0.05 + 1e-12:
        raise ValueError("table spacing on [0, 1] exceeds 0.05")
    I = float(np.trapezoid(g, b))
    if len(b) >= 3:
        idx = list(range(0, len(b), 2))
        if idx[-1] != len(b) - 1:
            idx.append(len(b) - 1)
        I_half = float(np.trapezoid(g[idx], b[idx]))
        rich = abs(I - I_half) / 3
    else:
        rich = 0.0
    widths = {s.b: s.upper - s.lower for s in table.samples if not s.tainted and s.b < 1}
    wb = np.array([widths.get(x, 0.0) for x in b])
    err = rich + 0.5 * float(np.trapezoid(wb, b))
    return I, err


# -- serialization ---------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def gtable_to_csv(table: GTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in table.samples:
        w.writerow([_fmt(s.b), _fmt(s.g_est), _fmt(s.upper), _fmt(s.lower),
                    _fmt(s.r_max), int(bool(s.tainted))])
    return buf.getvalue()


def gtable_from_csv(text: str) -> GTable:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    samples = [GSample(b=float(r["b"]), g_est=float(r["g_est"]), upper=float(r["upper"]),
                       lower=float(r["lower"]), r_max=float(r["r_max"]),
                       tainted=bool(int(r["tainted"])), snapped=float(r["b"]) >= 1)
               for r in rows]
    return GTable(samples, [])


def gtable_to_json(table: GTable, extra=None) -> str:
    doc = {"kind": "GTable", "C_fit": table.C_fit, "r_list": table.r_list,
           "config": table.config, "samples": [asdict(s) for s in table.samples]}
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=1, sort_keys=True)


def gtable_from_json(text: str) -> GTable:
    doc = json.loads(text)
    samples = [GSample(**s) for s in doc["samples"]]
    return GTable(samples, doc.get("r_list", []), doc.get("C_fit", 0.0), doc.get("config", {}))


def synthetic_table(fn, b_grid=None) -> GTable:
    """Table with ``g_est = fn(b)`` (zero for ``b >= 1``), for tests and demos."""
    b_grid = default_b_grid() if b_grid is None else list(b_grid)
    samples = []
    for b in b_grid:
        v = 0.0 if b >= 1 else float(fn(b))
        samples.append(GSample(b=b, g_est=v, upper=v, lower=v, r_max=0.0, snapped=b >= 1))
    return GTable(samples, [])
