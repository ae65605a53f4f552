import numpy as np
import pytest
import scipy.linalg

from glref.square import (
    EigenProblem, SquareProblem, aitken_limit, e_D, e_N, minimize_square, mu1, snap_dirichlet,
)


def test_problem_validation():
    with pytest.raises(ValueError):
        SquareProblem(-1.0, 4.0)
    with pytest.raises(ValueError):
        SquareProblem(1.0, 4.0, "robin")
    with pytest.raises(ValueError):
        SquareProblem(4.0, 4.0, resolution=8.0)  # needs 8 sqrt(4) = 16
    with pytest.raises(ValueError):
        EigenProblem(0.0)


def test_grid_resolves_magnetic_length():
    for b in (0.3, 1.0, 4.0):
        assert SquareProblem(b, 5.0).grid().h <= min(1 / 8, 1 / (8 * np.sqrt(b))) + 1e-15


def test_dirichlet_energy_vanishes_above_one():
    res = minimize_square(SquareProblem(2.0, 5.0, "dirichlet"))
    assert abs(res.energy) <= 1e-3 * 25
    assert e_D(2.0, 5.0) == 0.0


def test_weak_field_neumann_limit():
    res = minimize_square(SquareProblem(1e-6, 4.0, "neumann"))
    assert res.energy == pytest.approx(-8.0, rel=1e-2)


def test_dirichlet_above_neumann():
    assert e_D(0.5, 6.0) >= e_N(0.5, 6.0)


def test_minimizer_bounded_by_one():
    res = minimize_square(SquareProblem(0.4, 6.0, "neumann"))
    assert res.report.converged
    assert res.report.sup_modulus <= 1.005
    assert all(r["energy"] >= res.energy for r in res.runs if r["converged"])


def test_dirichlet_density_decreases_with_r():
    dens = [e_D(0.5, r, n_starts=2) / r ** 2 for r in (6.0, 9.0, 12.0)]
    assert dens[0] >= dens[1] - 1e-3 >= dens[2] - 2e-3


def test_snap_only_above_one():
    assert snap_dirichlet(1.2, 4.0, -1e-3) == 0.0
    assert snap_dirichlet(0.9, 4.0, -1e-3) == -1e-3
    assert snap_dirichlet(1.2, 4.0, -1.0) == -1.0


def test_aitken_is_exact_on_geometric_sequences():
    seq = [2.0 + 0.5 ** k for k in range(3)]
    assert aitken_limit(seq) == pytest.approx(2.0)


def test_mu1_positive_at_h_one():
    assert mu1(EigenProblem(1.0)) > 0


def loop_oracle(h, n):
    """Lowest eigenvalue of the discrete form, assembled node by node."""
    dx = 1.0 / (n - 1)
    x = -0.5 + dx * np.arange(n)
    w = np.where((np.arange(n) == 0) | (np.arange(n) == n - 1), 0.5, 1.0)
    K = np.zeros((n * n, n * n), complex)
    for j in range(n):
        for i in range(n):
            p = j * n + i
            for q, theta, weight in (
                (p + 1 if i + 1 < n else None, x[j] * dx / (2 * h), w[j]),
                (p + n if j + 1 < n else None, -x[i] * dx / (2 * h), w[i]),
            ):
                if q is None:
                    continue
                c = weight * h * h
                K[p, p] += c
                K[q, q] += c
                K[p, q] -= c * np.exp(1j * theta)
                K[q, p] -= c * np.exp(-1j * theta)
    M = np.diag(np.outer(w, w).ravel() * dx * dx)
    return scipy.linalg.eigh(K, M, eigvals_only=True)[0]


def test_mu1_matches_dense_oracle_on_same_grid():
    h, n = 0.2, 17
    assert mu1(EigenProblem(h, resolution=n - 1)) == pytest.approx(loop_oracle(h, n), rel=1e-8)


def test_energy_never_positive_above_critical_field():
    res = minimize_square(SquareProblem(1.2, 4.0, "dirichlet"), n_starts=2)
    assert res.energy <= 0.0
    assert res.report.sup_modulus <= 1.005
