"""Co-area check for magnetic fields vanishing along a curve.

For a field ``B0`` on a rectangle with zero set ``Gamma`` the two sides
compared are

    LHS = integral over Omega of g(b kappa |B0|)
    RHS = kappa^-1 * integral over Gamma of (b |grad B0|)^(1/3) E(b |grad B0|) ds

and ``|LHS - RHS| * b kappa`` should shrink as ``kappa`` grows.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .gfunc import GTable, g_interp_array, integral_g
from .strip import E_asymptotic, E_from_table, ETable


class AssumptionError(ValueError):
    """The field does not vanish along a regular curve."""


class EmptyZeroSetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FieldSpec:
    """Scalar field ``B0(x, y)`` on the rectangle ``domain = (x0, x1, y0, y1)``.

    ``func`` and ``grad`` take coordinate arrays; ``grad`` returns
    ``(dB/dx, dB/dy)``.
    """

    func: Callable
    grad: Callable
    domain: tuple = (-1.0, 1.0, -1.0, 1.0)
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        x0, x1, y0, y1 = self.domain
        if not (x1 > x0 and y1 > y0):
            raise ValueError(f"degenerate domain {self.domain}")

    def __call__(self, x, y):
        return self.func(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def grad_norm(self, x, y):
        gx, gy = self.grad(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return np.hypot(gx, gy)

    def describe(self) -> dict:
        return {"name": self.name, "params": dict(self.params), "domain": list(self.domain)}


def linear_field(domain=(-1.0, 1.0, -1.0, 1.0)) -> FieldSpec:
    return FieldSpec(lambda x, y: y + 0 * x,
                     lambda x, y: (np.zeros_like(x + y), np.ones_like(x + y)),
                     tuple(domain), "linear")


def tilted_field(slope=0.3, domain=(-1.0, 1.0, -1.0, 1.0)) -> FieldSpec:
    return FieldSpec(lambda x, y: y - slope * x,
                     lambda x, y: (np.full_like(x + y, -slope), np.ones_like(x + y)),
                     tuple(domain), "tilted", {"slope": slope})


def curved_field(curvature=0.25, domain=(-1.0, 1.0, -1.0, 1.0)) -> FieldSpec:
    """``B0 = y - a x^2``: a parabolic zero set, no critical points."""
    a = curvature
    return FieldSpec(lambda x, y: y - a * x * x,
                     lambda x, y: (-2 * a * x + 0 * y, np.ones_like(x + y)),
                     tuple(domain), "curved", {"curvature": a})


BUILTINS = {"linear": linear_field, "tilted": tilted_field, "curved": curved_field}


def sampled_field(values, x0, y0, h, domain=None, name="grid") -> FieldSpec:
    """Bicubic interpolant of node samples ``values[j, i] = B0(x0 + i h, y0 + j h)``.

    The gradient is the exact derivative of the interpolant.
    """
    values = np.asarray(values, dtype=float)
    ny, nx = values.shape
    if nx < 4 or ny < 4:
        raise ValueError("need at least 4x4 samples for bicubic interpolation")
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite field samples")
    xs = x0 + h * np.arange(nx)
    ys = y0 + h * np.arange(ny)
    spline = RectBivariateSpline(xs, ys, values.T, kx=3, ky=3)
    if domain is None:
        domain = (xs[0], xs[-1], ys[0], ys[-1])

    def func(x, y):
        return spline.ev(x, y)

    def grad(x, y):
        return spline.ev(x, y, dx=1), spline.ev(x, y, dy=1)

    return FieldSpec(func, grad, tuple(float(v) for v in domain), name,
                     {"nx": nx, "ny": ny, "x0": x0, "y0": y0, "h": h})


def read_grid_csv(path) -> FieldSpec:
    """Grid CSV: a header row ``nx, ny, x0, y0, h``, its values, then ``nx * ny`` row-major samples."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    head = [c.strip() for c in rows[0]]
    if head != ["nx", "ny", "x0", "y0", "h"]:
        raise ValueError(f"{path}: expected header nx,ny,x0,y0,h, got {head}")
    nx, ny = int(rows[1][0]), int(rows[1][1])
    x0, y0, h = (float(v) for v in rows[1][2:5])
    vals = np.array([float(c) for r in rows[2:] for c in r])
    if vals.size != nx * ny:
        raise ValueError(f"{path}: expected {nx * ny} samples, found {vals.size}")
    return sampled_field(vals.reshape(ny, nx), x0, y0, h, name=f"grid:{Path(path).name}")


def field_from_descriptor(desc, base_dir=".") -> FieldSpec:
    """Build a field from ``{"builtin": name, "params": {...}, "domain": [...]}`` or ``{"grid_csv": path}``."""
    if isinstance(desc, (str, Path)):
        p = Path(desc)
        desc = json.loads(p.read_text())
        base_dir = p.parent
    if "builtin" in desc:
        name = desc["builtin"]
        if name not in BUILTINS:
            raise ValueError(f"unknown built-in field {name!r}; choose from {sorted(BUILTINS)}")
        kw = dict(desc.get("params", {}))
        if "domain" in desc:
            kw["domain"] = tuple(float(v) for v in desc["domain"])
        return BUILTINS[name](**kw)
    if "grid_csv" in desc:
        spec = read_grid_csv(Path(base_dir) / desc["grid_csv"])
        if "domain" in desc:
            spec = FieldSpec(spec.func, spec.grad, tuple(float(v) for v in desc["domain"]),
                             spec.name, spec.params)
        return spec
    raise ValueError("field descriptor needs 'builtin' or 'grid_csv'")


# -- regularity check ------------------------------------------------------

@dataclass
class AssumptionReport:
    min_regularity: float
    boundary_crossings: int
    field_scale: float
    ok: bool


def check_assumption(spec: FieldSpec, samples=201, c_min=1e-6) -> AssumptionReport:
    """Sampled ``min(|B0| + |grad B0|)`` and the number of zero crossings on the boundary."""
    x0, x1, y0, y1 = spec.domain
    X, Y = np.meshgrid(np.linspace(x0, x1, samples), np.linspace(y0, y1, samples))
    B = spec(X, Y)
    reg = float(np.min(np.abs(B) + spec.grad_norm(X, Y)))
    scale = float(np.max(np.abs(B)))
    ring = np.concatenate([B[0, :], B[1:, -1], B[-1, -2::-1], B[-2:0:-1, 0]])
    zero = np.abs(ring) <= 1e-12 * max(scale, 1e-300)
    s = np.sign(ring)
    crossings = int(np.sum(s != np.roll(s, 1)))
    # A run of exact zeros along the boundary means Gamma lies on it.
    runs = bool(np.any(zero & np.roll(zero, 1)))
    ok = reg >= c_min and not runs and scale > 0
    return AssumptionReport(reg, crossings, scale, ok)


# -- zero set --------------------------------------------------------------

@dataclass
class LevelCurve:
    """Ordered polylines of ``{B0 = 0}`` with ``|grad B0|`` at every vertex."""

    components: list
    grad_norms: list
    field_scale: float = 1.0

    @property
    def length(self) -> float:
        return float(sum(np.sum(np.hypot(*np.diff(c, axis=0).T)) for c in self.components))

    def arc_weights(self):
        """Trapezoid weights along arc length, one array per component."""
        out = []
        for c in self.components:
            seg = np.hypot(*np.diff(c, axis=0).T)
            w = np.zeros(len(c))
            w[:-1] += seg / 2
            w[1:] += seg / 2
            out.append(w)
        return out


def extract_gamma(spec: FieldSpec, resolution=200.0, check=True) -> LevelCurve:
    """Marching-squares zero contour at ``resolution`` nodes per unit length.

    Crossings are placed by linear interpolation on cell edges and then
    moved by a Newton step along the edge, so boundary vertices stay on the
    boundary.  Further steps are taken only while a vertex residual exceeds
    1e-10 of the field scale.
    """
    if check:
        rep = check_assumption(spec)
        if not rep.ok:
            raise AssumptionError(f"field {spec.name!r} fails the regularity check: {rep}")
    x0, x1, y0, y1 = spec.domain
    nx = max(3, int(math.ceil((x1 - x0) * resolution)) + 1)
    ny = max(3, int(math.ceil((y1 - y0) * resolution)) + 1)
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    X, Y = np.meshgrid(xs, ys)
    B = spec(X, Y)
    scale = float(np.max(np.abs(B))) or 1.0
    pos = B >= 0  # exact zeros count as positive

    def edge_point(kind, j, i):
        # kind 0: horizontal edge (j, i)-(j, i+1); kind 1: vertical edge (j, i)-(j+1, i)
        if kind == 0:
            a, b_ = B[j, i], B[j, i + 1]
            p, q = np.array([xs[i], ys[j]]), np.array([xs[i + 1], ys[j]])
        else:
            a, b_ = B[j, i], B[j + 1, i]
            p, q = np.array([xs[i], ys[j]]), np.array([xs[i], ys[j + 1]])
        t = a / (a - b_) if a != b_ else 0.5
        pt = p + t * (q - p)
        d = q - p
        # one Newton step, repeated only while the vertex residual is too large
        for _ in range(4):
            val = float(spec(pt[0], pt[1]))
            if abs(val) <= 1e-10 * scale:
                break
            gx, gy = spec.grad(np.array(pt[0]), np.array(pt[1]))
            dBdt = float(gx) * d[0] + float(gy) * d[1]
            if dBdt == 0:
                break
            s = t - val / dBdt
            if not 0.0 <= s <= 1.0:
                break
            t, pt = s, p + s * (q - p)
        return pt

    hcross = pos[:, :-1] != pos[:, 1:]
    vcross = pos[:-1, :] != pos[1:, :]
    points = {}
    for j, i in zip(*np.nonzero(hcross)):
        points[(0, j, i)] = edge_point(0, j, i)
    for j, i in zip(*np.nonzero(vcross)):
        points[(1, j, i)] = edge_point(1, j, i)

    adj = {k: [] for k in points}
    for j in range(ny - 1):
        for i in range(nx - 1):
            edges = [e for e, c in (((0, j, i), hcross[j, i]), ((1, j, i + 1), vcross[j, i + 1]),
                                    ((0, j + 1, i), hcross[j + 1, i]), ((1, j, i), vcross[j, i]))
                     if c]
            if len(edges) == 2:
                pairs = [(edges[0], edges[1])]
            elif len(edges) == 4:
                centre = float(spec(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])))
                # Corners bottom-left, bottom-right, top-right, top-left.
                if (centre >= 0) == bool(pos[j, i]):
                    pairs = [(edges[0], edges[1]), (edges[2], edges[3])]
                else:
                    pairs = [(edges[3], edges[0]), (edges[1], edges[2])]
            else:
                continue
            for a, b_ in pairs:
                adj[a].append(b_)
                adj[b_].append(a)

    seen = set()
    comps = []
    for start in sorted(adj, key=lambda k: (len(adj[k]) != 1, k)):
        if start in seen:
            continue
        chain = [start]
        seen.add(start)
        while True:
            nxt = [k for k in adj[chain[-1]] if k not in seen]
            if not nxt:
                break
            chain.append(nxt[0])
            seen.add(nxt[0])
        if len(adj[start]) == 2 and len(chain) > 2 and start in adj[chain[-1]]:
            chain.append(start)  # closed loop
        if len(chain) >= 2:
            comps.append(np.array([points[k] for k in chain]))
    if not comps:
        raise EmptyZeroSetError(f"field {spec.name!r} has no zero set in {spec.domain}")
    grads = [spec.grad_norm(c[:, 0], c[:, 1]) for c in comps]
    return LevelCurve(comps, grads, scale)


# -- the two sides ---------------------------------------------------------

def _check_b_kappa(b, kappa):
    if not (b > 0 and kappa > 0):
        raise ValueError("b and kappa must be positive")
    if b * kappa < 1:
        raise ValueError(f"b*kappa = {b * kappa} < 1: the g-support is not a thin tube")


def lhs_area_integral(spec: FieldSpec, gtab: GTable, b, kappa, *, refine=None,
                      coarse=None, dt=0.01, max_batch=4_000_000):
    """Tensor trapezoid of ``g(b kappa |B0|)`` over the domain, refined inside the tube.

    The domain is covered by a coarse grid; cells that may meet the tube
    ``{|B0| < 1 / (b kappa)}`` (judged with a Lipschitz margin) are
    integrated with an ``F x F`` sub-grid, all others contribute zero
    since ``g`` vanishes there.  ``F`` is the larger of ``refine`` (at
    least 8) and the value giving sub-spacing ``dt / (b kappa max|grad B0|)``.
    Returns ``(value, info)``.
    """
    _check_b_kappa(b, kappa)
    if refine is not None and refine < 8:
        raise ValueError("refinement factor must be at least 8")
    integral_g(gtab)  # refuses tables with gaps
    bk = b * kappa
    x0, x1, y0, y1 = spec.domain
    W, H = x1 - x0, y1 - y0
    Xs, Ys = np.meshgrid(np.linspace(x0, x1, 257), np.linspace(y0, y1, 257))
    G = 1.1 * float(np.max(spec.grad_norm(Xs, Ys)))
    tube = 1.0 / bk
    if coarse is None:
        coarse = max(2 * tube / G, max(W, H) / 2048)
    ncx = max(1, int(math.ceil(W / coarse)))
    ncy = max(1, int(math.ceil(H / coarse)))
    hx, hy = W / ncx, H / ncy
    cx = x0 + hx * np.arange(ncx + 1)
    cy = y0 + hy * np.arange(ncy + 1)
    CX, CY = np.meshgrid(cx, cy)
    A = np.abs(spec(CX, CY))
    corner_min = np.minimum.reduce([A[:-1, :-1], A[:-1, 1:], A[1:, :-1], A[1:, 1:]])
    margin = 0.5 * math.hypot(hx, hy) * G
    flagged = np.argwhere(corner_min - margin < tube)

    F = int(math.ceil(max(hx, hy) * bk * G / dt))
    F = max(F, refine or 8)
    s = np.arange(F + 1) / F
    w1 = np.ones(F + 1)
    w1[0] = w1[-1] = 0.5
    wsub = np.outer(w1, w1) * (hx / F) * (hy / F)
    per_batch = max(1, max_batch // (F + 1) ** 2)
    total = 0.0
    for k in range(0, len(flagged), per_batch):
        cells = flagged[k:k + per_batch]
        px = cx[cells[:, 1]][:, None, None] + hx * s[None, None, :]
        py = cy[cells[:, 0]][:, None, None] + hy * s[None, :, None]
        px, py = np.broadcast_arrays(px, py)
        vals = g_interp_array(gtab, bk * np.abs(spec(px, py)))
        total += float(np.sum(vals * wsub[None]))
    # Tube area by the same quadrature, for reporting.
    info = {"coarse_cells": [int(ncy), int(ncx)], "flagged_cells": int(len(flagged)),
            "refine": int(F), "tube_halfwidth": tube / G * 1.1}
    return total, info


def tube_area(spec: FieldSpec, b, kappa, samples=2049) -> float:
    """Area of ``{|B0| < 1 / (b kappa)}`` by midpoint sampling."""
    x0, x1, y0, y1 = spec.domain
    hx, hy = (x1 - x0) / samples, (y1 - y0) / samples
    X, Y = np.meshgrid(x0 + hx * (np.arange(samples) + 0.5), y0 + hy * (np.arange(samples) + 0.5))
    return float(np.sum(np.abs(spec(X, Y)) < 1.0 / (b * kappa)) * hx * hy)


def make_E_source(source, I=None):
    """``E(L)`` callable from an ``ETable``, the string ``"asymptotic"`` (needs ``I``), or a callable."""
    if isinstance(source, ETable):
        return lambda L: E_from_table(source, L)
    if source == "asymptotic":
        if I is None:
            raise ValueError("the asymptotic source needs I")
        return E_asymptotic(I)
    if callable(source):
        return source
    raise ValueError(f"unknown E source {source!r}")


def rhs_curve_integral(curve: LevelCurve, E, b, kappa) -> float:
    """``kappa^-1 * sum over Gamma of (b |grad B0|)^(1/3) E(b |grad B0|)`` by the trapezoid rule."""
    _check_b_kappa(b, kappa)
    total = 0.0
    for w, gn in zip(curve.arc_weights(), curve.grad_norms):
        L = b * np.asarray(gn, dtype=float)
        total += float(np.sum(w * L ** (1.0 / 3.0) * np.asarray(E(L), dtype=float)))
    return total / kappa


def default_b_of_kappa(kappa, c=0.575):
    """``b(kappa) = c kappa^(-1/4)``: ``b -> 0`` while ``b kappa -> infinity``."""
    return c * kappa ** (-0.25)


def verify_coarea(spec: FieldSpec, gtab: GTable, E_source, kappas, *, b_of_kappa=None,
                  curve_resolution=400.0, refine=None, dt=0.01, require_decrease=True):
    """Both sides over a kappa sweep and the normalized discrepancy ``|LHS - RHS| b kappa``.

    ``passed`` requires the discrepancy to decrease strictly along the
    sweep when ``require_decrease`` is set.
    """
    I, I_err = integral_g(gtab)
    E = make_E_source(E_source, I)
    b_of_kappa = b_of_kappa or default_b_of_kappa
    curve = extract_gamma(spec, curve_resolution)
    assumption = check_assumption(spec)
    rows = []
    for kappa in kappas:
        b = float(b_of_kappa(kappa))
        lhs, info = lhs_area_integral(spec, gtab, b, kappa, refine=refine, dt=dt)
        rhs = rhs_curve_integral(curve, E, b, kappa)
        disc = abs(lhs - rhs) * b * kappa
        rows.append({"kappa": float(kappa), "b": b, "b_kappa": b * kappa, "lhs": lhs, "rhs": rhs,
                     "discrepancy": disc, "relative": disc / abs(I) if I else float("inf"),
                     "lhs_scaled": lhs * b * kappa, "L_range": [
                         float(b * min(np.min(g) for g in curve.grad_norms)),
                         float(b * max(np.max(g) for g in curve.grad_norms))],
                     "tube_area": tube_area(spec, b, kappa), "quadrature": info})
    d = [r["discrepancy"] for r in rows]
    decreasing = all(a > c for a, c in zip(d, d[1:]))
    return {"field": spec.describe(), "I": I, "I_err": I_err, "gamma_length": curve.length,
            "assumption": {"min_regularity": assumption.min_regularity,
                           "boundary_crossings": assumption.boundary_crossings},
            "rows": rows, "decreasing": decreasing,
            "passed": decreasing or not require_decrease}
