import numpy as np
import pytest
from hypothesis import given, strategies as st

import glref.gfunc as gf
from glref.gfunc import (
    GSample, GTable, TaintedTableError, default_b_grid, fit_bulk, g_interp, g_interp_array,
    gtable_from_csv, gtable_from_json, gtable_to_csv, gtable_to_json, integral_g, isotonic,
    synthetic_table, tabulate_g,
)


def test_default_grid_ends_at_one_once():
    grid = default_b_grid()
    assert grid[-1] == 1.0 and grid.count(1.0) == 1
    assert max(np.diff([0.0] + grid)) <= 0.05 + 1e-12


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=30))
def test_isotonic_is_monotone_and_mean_preserving(y):
    z = isotonic(y)
    assert np.all(np.diff(z) >= -1e-12)
    assert np.sum(z) == pytest.approx(np.sum(y), abs=1e-9)


def test_fit_bulk_recovers_exact_model():
    b, r = 0.3, np.array([6.0, 9.0, 12.0])
    g, c, resid = fit_bulk(b, r, (-0.2 + 0.7 * np.sqrt(b) / r) * r ** 2)
    assert g == pytest.approx(-0.2, abs=1e-12)
    assert c == pytest.approx(0.7, abs=1e-10)
    assert resid < 1e-12


def test_fit_bulk_intercept_is_an_upper_bound_estimate():
    r = np.array([6.0, 9.0, 12.0])
    # densities increasing with r would need c < 0: fall back to c = 0
    g, c, _ = fit_bulk(0.3, r, np.array([-0.3, -0.25, -0.2]) * r ** 2)
    assert c == 0.0
    assert g <= -0.3


def test_interpolant_endpoints():
    t = synthetic_table(lambda b: -0.5 * (1 - b) ** 2)
    assert g_interp(t, 0.0) == -0.5
    assert g_interp(t, 1.0) == 0.0
    assert g_interp(t, 1.7) == 0.0
    with pytest.raises(ValueError):
        g_interp(t, -0.1)
    vals = g_interp_array(t, np.linspace(0, 2, 101))
    assert np.all(np.diff(vals) >= 0)


def test_integral_is_exact_for_linear_g():
    t = synthetic_table(lambda b: 0.5 * (b - 1))
    I, err = integral_g(t)
    assert I == pytest.approx(-0.25, abs=1e-14)
    assert err < 1e-14


def test_integral_converges_for_quadratic_g():
    t = synthetic_table(lambda b: -0.5 * (1 - b) ** 2)
    I, err = integral_g(t)
    assert I == pytest.approx(-1 / 6, abs=2e-4)
    assert abs(I + 1 / 6) <= 3 * err + 1e-12


def test_coarse_tables_are_refused():
    t = synthetic_table(lambda b: 0.5 * (b - 1), [0.1, 0.5, 1.0])
    with pytest.raises(ValueError):
        integral_g(t)


def test_tainted_samples_block_strict_integration():
    t = synthetic_table(lambda b: 0.5 * (b - 1))
    t.samples[3].tainted = True
    with pytest.raises(TaintedTableError):
        integral_g(t)


def test_csv_and_json_round_trip():
    t = synthetic_table(lambda b: -0.5 * (1 - b) ** 3)
    csv_text = gtable_to_csv(t)
    assert gtable_to_csv(gtable_from_csv(csv_text)) == csv_text
    js = gtable_to_json(t)
    assert gtable_to_json(gtable_from_json(js)) == js


def test_snapped_rows_need_no_solver(monkeypatch):
    def boom(*a, **k):
        raise AssertionError("solver called")
    monkeypatch.setattr(gf, "minimize_square", boom)
    t = tabulate_g([1.5])
    assert [(s.b, s.g_est) for s in t.samples] == [(1.5, 0.0)]


def test_small_tabulation_is_ordered():
    t = tabulate_g([0.3, 0.7, 1.0], (4.0, 5.0, 6.0), n_starts=2)
    g = [s.g_est for s in t.samples]
    assert -0.5 <= g[0] <= g[1] <= g[2] == 0.0
    for s in t.samples[:2]:
        assert s.lower <= s.g_est <= s.upper <= 0
