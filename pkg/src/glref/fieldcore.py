"""Uniform grids, Peierls link phases and the discrete Ginzburg-Landau energy.

Fields live on the nodes of a :class:`Grid` as complex arrays of shape
``(ny, nx)`` (row index = y, column index = x).  Link phases live on the
edges: ``theta_x[j, i]`` sits on the edge from node ``(j, i)`` to
``(j, i + 1)`` and ``theta_y[j, i]`` on the edge from ``(j, i)`` to
``(j + 1, i)``.  The covariant difference along an edge is
``exp(1j * theta) * u[head] - u[tail]`` with ``theta = -h * A(midpoint)``.

The discrete energy is

    E(u) = k * sum_edges w_e |exp(i theta) u_head - u_tail|^2
           + p * h^2 * sum_nodes w_n (-|u|^2 + |u|^4 / 2)

with tensor-product trapezoid weights ``w_n`` (1 inside, 1/2 on the rim,
1/4 at corners) and edge weights ``w_e`` equal to the trapezoid factor
transverse to the edge.
"""

from __future__ import annotations

from functools import lru_cache
from dataclasses import dataclass, field
from typing import Callable, Literal, Union

import numpy as np

Boundary = Literal["dirichlet", "neumann"]
PotentialFn = Callable[[np.ndarray, np.ndarray], tuple]


class GridMismatchError(ValueError):
    """Field and links (or two fields) do not live on the same grid."""


@dataclass(frozen=True)
class Grid:
    """Uniform lattice with equal spacing in x and y.

    Parameters
    ----------
    origin : (float, float)
        Coordinates of node ``(0, 0)``, the lower-left corner.
    extent : (float, float)
        Width and height of the rectangle.
    nodes : (int, int)
        Node counts ``(nx, ny)``, each at least 2.
    """

    origin: tuple
    extent: tuple
    nodes: tuple

    def __post_init__(self):
        nx, ny = (int(n) for n in self.nodes)
        W, H = (float(e) for e in self.extent)
        if nx < 2 or ny < 2:
            raise ValueError(f"need at least 2 nodes per direction, got {self.nodes}")
        if not (W > 0 and H > 0 and np.isfinite(W) and np.isfinite(H)):
            raise ValueError(f"extent must be positive and finite, got {self.extent}")
        hx, hy = W / (nx - 1), H / (ny - 1)
        if abs(hx - hy) > 1e-12 * max(hx, hy):
            raise ValueError(f"unequal spacing hx={hx!r}, hy={hy!r}")
        object.__setattr__(self, "nodes", (nx, ny))
        object.__setattr__(self, "extent", (W, H))
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @classmethod
    def centered(cls, width, height, h_max, multiple=1):
        """Grid on ``(-W/2, W/2) x (-H/2, H/2)`` with spacing at most ``h_max``.

        Both directions share one spacing exactly, so the height is
        rounded up to a whole number of cells.  ``multiple`` forces the
        cell counts to be divisible by it, which makes :meth:`coarsen`
        applicable ``log2(multiple)`` times.
        """
        m = int(multiple)
        cx = m * int(np.ceil(width / (m * h_max) - 1e-9))
        h = width / cx
        cy = m * int(np.ceil(height / (m * h) - 1e-9))
        H = h * cy
        return cls((-width / 2, -H / 2), (width, H), (cx + 1, cy + 1))

    def coarsen(self):
        """Grid with every other node, or None when the cell counts are odd."""
        nx, ny = self.nodes
        if (nx - 1) % 2 or (ny - 1) % 2 or min(nx, ny) < 5:
            return None
        return Grid(self.origin, self.extent, ((nx - 1) // 2 + 1, (ny - 1) // 2 + 1))

    @property
    def h(self) -> float:
        return self.extent[0] / (self.nodes[0] - 1)

    @property
    def shape(self) -> tuple:
        """Array shape ``(ny, nx)`` of node fields."""
        return (self.nodes[1], self.nodes[0])

    @property
    def size(self) -> int:
        return self.nodes[0] * self.nodes[1]

    @property
    def area(self) -> float:
        return self.extent[0] * self.extent[1]

    def coords(self):
        """Node coordinates ``X, Y`` as arrays of shape ``(ny, nx)``."""
        nx, ny = self.nodes
        h = self.h
        x = self.origin[0] + h * np.arange(nx)
        y = self.origin[1] + h * np.arange(ny)
        return np.meshgrid(x, y)

    def node_weights(self) -> np.ndarray:
        """Tensor-product trapezoid weights (without the ``h**2`` factor)."""
        nx, ny = self.nodes
        wx = np.ones(nx)
        wx[[0, -1]] = 0.5
        wy = np.ones(ny)
        wy[[0, -1]] = 0.5
        return np.outer(wy, wx)

    def edge_weights(self):
        """Transverse trapezoid factors for x-edges and y-edges."""
        nx, ny = self.nodes
        wy = np.ones(ny)
        wy[[0, -1]] = 0.5
        wx = np.ones(nx)
        wx[[0, -1]] = 0.5
        return (np.repeat(wy[:, None], nx - 1, axis=1),
                np.repeat(wx[None, :], ny - 1, axis=0))

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[0, :] = mask[-1, :] = True
        mask[:, 0] = mask[:, -1] = True
        return mask


def potential_A0(x, y):
    """Constant unit field potential ``A0 = (-y, x) / 2``."""
    return -0.5 * y, 0.5 * x


def potential_Avan(x, y):
    """Potential ``(-y**2 / 2, 0)`` of the field ``B = y`` vanishing on the x-axis."""
    return -0.5 * y * y, np.zeros_like(y)


_NAMED_POTENTIALS = {"A0": potential_A0, "Avan": potential_Avan}


@dataclass(frozen=True, eq=False)
class GaugeLinks:
    """Per-edge phases ``theta = -integral of A along the edge`` (midpoint rule)."""

    grid: Grid
    theta_x: np.ndarray
    theta_y: np.ndarray
    source: str = "custom"

    def phases(self):
        """Cached ``exp(1j * theta)`` for both edge families."""
        cache = self.__dict__.get("_phases")
        if cache is None:
            cache = (np.exp(1j * self.theta_x), np.exp(1j * self.theta_y))
            object.__setattr__(self, "_phases", cache)
        return cache

    def scaled(self, factor: float) -> "GaugeLinks":
        """Links of the potential ``factor * A`` on the same grid."""
        return GaugeLinks(self.grid, factor * self.theta_x, factor * self.theta_y,
                          self.source)

    def plaquette_sums(self) -> np.ndarray:
        """Signed circulation of the phases around every plaquette (counterclockwise)."""
        tx, ty = self.theta_x, self.theta_y
        return tx[:-1, :] + ty[:, 1:] - tx[1:, :] - ty[:, :-1]


def build_links(grid: Grid, potential: Union[str, PotentialFn]) -> GaugeLinks:
    """Link phases of a vector potential on ``grid``.

    ``potential`` is ``"A0"``, ``"Avan"`` or a callable ``A(x, y) -> (Ax, Ay)``
    accepting coordinate arrays.  The phase of an edge of length ``h`` is
    ``-h * A(midpoint) . direction``.
    """
    if isinstance(potential, str):
        try:
            fn = _NAMED_POTENTIALS[potential]
        except KeyError:
            raise ValueError(f"unknown potential {potential!r}") from None
        source = potential
    else:
        fn, source = potential, "custom"
    X, Y = grid.coords()
    h = grid.h
    xm, ym = 0.5 * (X[:, 1:] + X[:, :-1]), Y[:, :-1]
    Ax, _ = fn(xm, ym)
    xm, ym = X[:-1, :], 0.5 * (Y[1:, :] + Y[:-1, :])
    _, Ay = fn(xm, ym)
    Ax = np.broadcast_to(np.asarray(Ax, dtype=float), (grid.shape[0], grid.shape[1] - 1))
    Ay = np.broadcast_to(np.asarray(Ay, dtype=float), (grid.shape[0] - 1, grid.shape[1]))
    if not (np.all(np.isfinite(Ax)) and np.all(np.isfinite(Ay))):
        raise ValueError("potential is not finite at every edge midpoint")
    return GaugeLinks(grid, -h * Ax, -h * Ay, source)


@dataclass(frozen=True)
class EnergyParams:
    """Coefficients of the kinetic and potential terms plus the boundary condition."""

    kinetic_coefficient: float
    potential_coefficient: float = 1.0
    boundary: Boundary = "neumann"

    def __post_init__(self):
        for name in ("kinetic_coefficient", "potential_coefficient"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if self.boundary not in ("dirichlet", "neumann"):
            raise ValueError(f"boundary must be 'dirichlet' or 'neumann', got {self.boundary!r}")


@dataclass
class EnergyReport:
    energy: float
    grad_norm: float
    iterations: int
    converged: bool
    wall_time: float
    sup_modulus: float
    trace: list = field(default_factory=list)
    start: str = ""

    def as_dict(self) -> dict:
        return {
            "energy": self.energy,
            "grad_norm": self.grad_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "wall_time": self.wall_time,
            "sup_modulus": self.sup_modulus,
            "start": self.start,
        }


def _check(u, links):
    u = np.asarray(u)
    if u.shape != links.grid.shape:
        raise GridMismatchError(f"field shape {u.shape} does not match grid {links.grid.shape}")
    return u


def _differences(u, links):
    px, py = links.phases()
    dx = px * u[:, 1:] - u[:, :-1]
    dy = py * u[1:, :] - u[:-1, :]
    return dx, dy


def kinetic_form(u, links: GaugeLinks) -> float:
    """Unit-coefficient kinetic sum ``sum_e w_e |D_e u|^2``."""
    wx, wy = _edge_weights(links.grid)
    dx, dy = _differences(u, links)
    return float(np.sum(wx * (dx.real ** 2 + dx.imag ** 2))
                 + np.sum(wy * (dy.real ** 2 + dy.imag ** 2)))


def energy(u, links: GaugeLinks, params: EnergyParams) -> float:
    u = _check(u, links)
    grid = links.grid
    rho = u.real ** 2 + u.imag ** 2
    pot = np.sum(_node_weights(grid) * (rho * (0.5 * rho - 1.0)))
    return (params.kinetic_coefficient * kinetic_form(u, links)
            + params.potential_coefficient * grid.h ** 2 * float(pot))


def gradient(u, links: GaugeLinks, params: EnergyParams) -> np.ndarray:
    """Gradient ``G`` of :func:`energy` with ``dE = 2 h^2 Re sum conj(G) du``.

    Away from the boundary this is the discrete functional derivative
    ``k * (-Laplacian_A u) + p * (|u|^2 - 1) u``.  Entries on boundary
    nodes are zero for Dirichlet problems.
    """
    u = _check(u, links)
    grid = links.grid
    wx, wy = _edge_weights(grid)
    px, py = links.phases()
    dx, dy = _differences(u, links)
    dx = wx * dx
    dy = wy * dy
    g = np.zeros(grid.shape, dtype=complex)
    g[:, :-1] -= dx
    g[:, 1:] += np.conj(px) * dx
    g[:-1, :] -= dy
    g[1:, :] += np.conj(py) * dy
    g *= params.kinetic_coefficient / grid.h ** 2
    rho = u.real ** 2 + u.imag ** 2
    g += params.potential_coefficient * _node_weights(grid) * (rho - 1.0) * u
    if params.boundary == "dirichlet":
        _zero_rim(g)
    return g


def gauge_transform(u, links: GaugeLinks, phi):
    """Return ``(exp(i phi) u, links')`` with ``theta' = theta + phi_tail - phi_head``."""
    u = _check(u, links)
    phi = np.asarray(phi, dtype=float)
    if phi.shape != links.grid.shape:
        raise GridMismatchError(f"phase shape {phi.shape} does not match grid {links.grid.shape}")
    if not np.all(np.isfinite(phi)):
        raise ValueError("gauge phase must be finite")
    tx = links.theta_x + phi[:, :-1] - phi[:, 1:]
    ty = links.theta_y + phi[:-1, :] - phi[1:, :]
    return np.exp(1j * phi) * u, GaugeLinks(links.grid, tx, ty, links.source)


def kinetic_matrix(links: GaugeLinks):
    """Sparse Hermitian matrix ``K`` with ``conj(u) . K u = kinetic_form(u, links)``."""
    import scipy.sparse as sp

    grid = links.grid
    ny, nx = grid.shape
    idx = np.arange(grid.size).reshape(grid.shape)
    wx, wy = _edge_weights(grid)
    px, py = links.phases()
    tails = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
    heads = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
    w = np.concatenate([wx.ravel(), wy.ravel()])
    ph = np.concatenate([px.ravel(), py.ravel()])
    rows = np.concatenate([tails, heads, tails, heads])
    cols = np.concatenate([tails, heads, heads, tails])
    vals = np.concatenate([w, w, -w * ph, -w * np.conj(ph)]).astype(complex)
    return sp.csr_matrix((vals, (rows, cols)), shape=(grid.size, grid.size))


def weighted_mass(u, grid: Grid) -> float:
    """Trapezoid approximation of the integral of ``|u|^2``."""
    return float(grid.h ** 2 * np.sum(_node_weights(grid) * np.abs(u) ** 2))


def _zero_rim(a):
    a[0, :] = 0
    a[-1, :] = 0
    a[:, 0] = 0
    a[:, -1] = 0


@lru_cache(maxsize=64)
def _node_weights(grid):
    return grid.node_weights()


@lru_cache(maxsize=64)
def _edge_weights(grid):
    return grid.edge_weights()

