import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from glref.fieldcore import (
    EnergyParams, GaugeLinks, Grid, GridMismatchError, build_links, energy, gauge_transform,
    gradient, kinetic_form, kinetic_matrix, weighted_mass,
)
from glref.verify import directional_check


def small_grid(nx=9, ny=7, h=0.25):
    return Grid((-1.0, -0.75), (h * (nx - 1), h * (ny - 1)), (nx, ny))


def test_grid_rejects_unequal_spacing():
    with pytest.raises(ValueError):
        Grid((0, 0), (1.0, 1.0), (5, 6))


def test_grid_centered_and_coarsen():
    g = Grid.centered(5.0, 3.0, 0.3, multiple=4)
    assert g.h <= 0.3
    assert (g.nodes[0] - 1) % 4 == 0 and (g.nodes[1] - 1) % 4 == 0
    assert g.origin[0] == -2.5
    c = g.coarsen()
    assert c.h == pytest.approx(2 * g.h)
    assert c.coarsen().coarsen() is None or c.coarsen().h == pytest.approx(4 * g.h)


def test_node_weights_integrate_area():
    g = small_grid()
    assert np.sum(g.node_weights()) * g.h ** 2 == pytest.approx(g.area, rel=1e-14)


def test_uniform_field_flux():
    g = small_grid()
    links = build_links(g, "A0")
    np.testing.assert_allclose(links.plaquette_sums(), -g.h ** 2, atol=1e-14)


def test_vanishing_field_flux():
    g = small_grid()
    links = build_links(g, "Avan")
    _, Y = g.coords()
    ymid = 0.5 * (Y[:-1, :-1] + Y[1:, :-1])
    np.testing.assert_allclose(links.plaquette_sums(), -g.h ** 2 * ymid, atol=1e-14)


def test_build_links_rejects_nonfinite():
    g = small_grid()
    with pytest.raises(ValueError):
        build_links(g, lambda x, y: (np.full_like(x, np.nan), y))


def test_constant_state_energy():
    # u = 1 with zero links: no kinetic energy, potential -1/2 per unit area
    g = small_grid()
    links = build_links(g, lambda x, y: (0 * x, 0 * y))
    E = energy(np.ones(g.shape, complex), links, EnergyParams(1.0, 1.0, "neumann"))
    assert E == pytest.approx(-0.5 * g.area, rel=1e-14)


def test_kinetic_matrix_matches_form():
    rng = np.random.default_rng(3)
    g = small_grid()
    links = build_links(g, "A0").scaled(2.5)
    u = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    K = kinetic_matrix(links)
    quad = np.vdot(u.ravel(), K @ u.ravel())
    assert abs(quad.imag) < 1e-10
    assert quad.real == pytest.approx(kinetic_form(u, links), rel=1e-12)


def test_dirichlet_gradient_vanishes_on_rim():
    rng = np.random.default_rng(4)
    g = small_grid()
    u = rng.standard_normal(g.shape) + 0j
    G = gradient(u, build_links(g, "A0"), EnergyParams(0.5, 1.0, "dirichlet"))
    assert np.all(G[g.boundary_mask()] == 0)


def test_shape_mismatch_errors():
    g = small_grid()
    links = build_links(g, "A0")
    with pytest.raises(GridMismatchError):
        energy(np.zeros((3, 3), complex), links, EnergyParams(1.0))
    with pytest.raises(GridMismatchError):
        gauge_transform(np.zeros(g.shape, complex), links, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        gauge_transform(np.zeros(g.shape, complex), links, np.full(g.shape, np.inf))


def test_params_validation():
    with pytest.raises(ValueError):
        EnergyParams(-1.0)
    with pytest.raises(ValueError):
        EnergyParams(1.0, 1.0, "periodic")


def test_weighted_mass_of_ones_is_area():
    g = small_grid()
    assert weighted_mass(np.ones(g.shape, complex), g) == pytest.approx(g.area)


GRID = small_grid(8, 6)
finite = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)
field = arrays(np.float64, (2,) + GRID.shape, elements=finite)
phase = arrays(np.float64, GRID.shape, elements=st.floats(-20.0, 20.0))


@settings(max_examples=60, deadline=None)
@given(field, phase, st.sampled_from(["A0", "Avan"]), st.sampled_from(["neumann", "dirichlet"]),
       st.floats(0.05, 3.0))
def test_gauge_invariance(uv, phi, pot, bc, b):
    u = uv[0] + 1j * uv[1]
    links = build_links(GRID, pot)
    params = EnergyParams(b, 1.3, bc)
    u2, links2 = gauge_transform(u, links, phi)
    e1, e2 = energy(u, links, params), energy(u2, links2, params)
    assert abs(e2 - e1) <= 1e-12 * max(abs(e1), 1.0)
    np.testing.assert_allclose(gradient(u2, links2, params),
                               np.exp(1j * phi) * gradient(u, links, params), atol=1e-11)


@settings(max_examples=40, deadline=None)
@given(field, field, st.sampled_from(["A0", "Avan"]), st.sampled_from(["neumann", "dirichlet"]))
def test_gradient_matches_finite_differences(uv, dv, pot, bc):
    u = uv[0] + 1j * uv[1]
    d = dv[0] + 1j * dv[1]
    if bc == "dirichlet":
        u[GRID.boundary_mask()] = 0
        d[GRID.boundary_mask()] = 0
    if np.linalg.norm(d) < 1e-3:
        return
    d /= np.linalg.norm(d)
    err = directional_check(u, d, build_links(GRID, pot), EnergyParams(0.7, 1.1, bc))
    assert err < 1e-6


def test_random_links_are_gauge_links():
    rng = np.random.default_rng(0)
    ny, nx = GRID.shape
    links = GaugeLinks(GRID, rng.uniform(-3, 3, (ny, nx - 1)), rng.uniform(-3, 3, (ny - 1, nx)))
    np.testing.assert_allclose(np.abs(links.phases()[0]), 1.0)


def test_gradient_check_at_a_critical_point():
    # u = 0 is critical: both derivatives vanish and must not count as a mismatch
    u = np.zeros(GRID.shape, complex)
    d = np.ones(GRID.shape, complex) / np.sqrt(GRID.shape[0] * GRID.shape[1])
    links = build_links(GRID, "A0")
    assert np.all(gradient(u, links, EnergyParams(0.7, 1.1, "neumann")) == 0)
    assert directional_check(u, d, links, EnergyParams(0.7, 1.1, "neumann")) < 1e-6
