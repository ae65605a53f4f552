import numpy as np
import pytest

from glref.strip import (
    ESample, ETable, E_asymptotic, E_from_table, FitError, StripProblem, conj_reflect_x,
    default_half_height, etable_from_csv, etable_from_json, etable_to_csv, etable_to_json,
    fit_strip, minimize_strip, reflect_y, sandwich_constants, symmetry_defects,
    scaling_ratios,
)

R = np.array([4.0, 8.0, 12.0])


def test_fit_recovers_pure_two_thirds_law():
    fit = fit_strip(R, (-1.0 + R ** (-2 / 3)) * R)
    assert fit["E"] == pytest.approx(-1.0, abs=1e-10)
    assert fit["residual_r23"] < 1e-12


def test_fit_on_constant_data():
    fit = fit_strip(R, -2.0 * R)
    assert fit["E"] == pytest.approx(-2.0, abs=1e-12)
    assert fit["c"] == 0.0 and fit["a"] == pytest.approx(0.0, abs=1e-12)


def test_fit_recovers_end_cost_law():
    fit = fit_strip(R, -3.0 * R + 6.0)
    assert fit["E"] == pytest.approx(-3.0, abs=1e-10)
    assert fit["a"] == pytest.approx(6.0, abs=1e-9)


def test_fit_intercept_below_every_sample():
    rng = np.random.default_rng(0)
    for _ in range(50):
        y = -1 + rng.uniform(0, 1, 3)
        fit = fit_strip(R, y * R)
        assert fit["E"] <= y.min() + 1e-15
        assert fit["c"] >= 0 and fit["a"] >= 0


def test_fit_needs_two_points():
    with pytest.raises(FitError):
        fit_strip([4.0], [-1.0])


def test_problem_validation_and_defaults():
    assert default_half_height(1.0) == 4.0
    assert default_half_height(0.05) == pytest.approx(2 * 0.05 ** (-2 / 3))
    with pytest.raises(ValueError):
        StripProblem(0.2, 3.0)
    with pytest.raises(ValueError):
        StripProblem(0.2, 4.0, T=2.0)
    p = StripProblem(0.1, 4.0)
    assert p.grid().h <= 1 / (8 * np.sqrt(p.half_height)) + 1e-15


def test_symmetry_maps_are_involutions():
    rng = np.random.default_rng(1)
    u = rng.standard_normal((5, 7)) + 1j * rng.standard_normal((5, 7))
    np.testing.assert_array_equal(reflect_y(reflect_y(u)), u)
    np.testing.assert_array_equal(conj_reflect_x(conj_reflect_x(u)), u)


@pytest.fixture(scope="module")
def small_strip():
    return minimize_strip(StripProblem(0.5, 4.0, levels=2), n_starts=2)


def test_strip_minimizer_properties(small_strip):
    res = small_strip
    assert res.report.converged
    assert res.energy < 0
    assert res.report.sup_modulus <= 1.005
    assert 0 < res.mass_ratio < 10
    d = symmetry_defects(res)
    assert d["reflect_y"] <= 1e-6 * abs(d["energy"])
    assert d["conj_reflect_x"] <= 1e-6 * abs(d["energy"])


def _table(rows):
    return ETable([ESample(L=L, R_list=[4.0], e_gs=[E * 4], E_est=E, err_est=0.0, upper=E,
                           c_fit=0.0, residual=0.0, spread=0.0) for L, E in rows])


def test_table_interpolation_is_exact_for_scaling_law():
    I = -0.15
    E = E_asymptotic(I)
    t = _table([(L, float(E(L))) for L in (0.2, 0.1, 0.05)])
    for L in (0.2, 0.13, 0.07, 0.05):
        assert E_from_table(t, L) == pytest.approx(float(E(L)), rel=1e-12)
    with pytest.raises(ValueError):
        E_from_table(t, 0.3)
    assert [r for _, r in scaling_ratios(t, I)] == pytest.approx([1.0, 1.0, 1.0])
    assert sandwich_constants(t, I) == pytest.approx((0.0, 0.0), abs=1e-12)


def test_table_round_trips():
    t = _table([(0.2, -3.4), (0.1, -7.5)])
    text = etable_to_csv(t)
    assert etable_to_csv(etable_from_csv("# stamp\n" + text)) == text
    js = etable_to_json(t)
    assert etable_to_json(etable_from_json(js)) == js
