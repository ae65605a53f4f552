import json

import numpy as np
import pytest

from glref.coarea import (
    AssumptionError, EmptyZeroSetError, FieldSpec, check_assumption, curved_field,
    extract_gamma, field_from_descriptor, lhs_area_integral, linear_field, make_E_source,
    rhs_curve_integral, sampled_field, tilted_field, verify_coarea,
)
from glref.gfunc import integral_g, synthetic_table
from glref.strip import E_asymptotic

GTAB = synthetic_table(lambda b: -0.5 * (1 - b) ** 2)
I, _ = integral_g(GTAB)


def test_linear_zero_set():
    c = extract_gamma(linear_field(), 50)
    assert len(c.components) == 1
    assert c.length == pytest.approx(2.0, abs=1e-10)
    assert np.all(np.abs(c.components[0][:, 1]) < 1e-14)


def test_tilted_zero_set():
    c = extract_gamma(tilted_field(0.3), 50)
    assert c.length == pytest.approx(2 * np.sqrt(1.09), abs=1e-8)
    np.testing.assert_allclose(c.grad_norms[0], np.sqrt(1.09))


def test_vertices_lie_on_the_zero_set():
    spec = curved_field(0.25)
    c = extract_gamma(spec, 40)
    for comp in c.components:
        assert np.max(np.abs(spec(comp[:, 0], comp[:, 1]))) <= 1e-8 * c.field_scale
    # ordered: consecutive vertices are close
    steps = np.hypot(*np.diff(c.components[0], axis=0).T)
    assert steps.max() < 2 / 40


def test_curve_length_converges_at_second_order():
    spec = curved_field(0.25)
    L = [extract_gamma(spec, r).length for r in (25, 50, 100, 200)]
    orders = [np.log2(abs(L[k + 1] - L[k]) / abs(L[k + 2] - L[k + 1])) for k in range(2)]
    assert min(orders) >= 1.8


def test_closed_zero_set_is_a_loop():
    circle = FieldSpec(lambda x, y: x * x + y * y - 0.25,
                       lambda x, y: (2 * x, 2 * y), (-1.0, 1.0, -1.0, 1.0), "circle")
    c = extract_gamma(circle, 100)
    assert len(c.components) == 1
    np.testing.assert_allclose(c.components[0][0], c.components[0][-1])
    assert c.length == pytest.approx(np.pi, rel=1e-3)


def test_degenerate_zero_is_rejected():
    bowl = FieldSpec(lambda x, y: x * x + y * y, lambda x, y: (2 * x, 2 * y), name="bowl")
    assert not check_assumption(bowl).ok
    with pytest.raises(AssumptionError):
        extract_gamma(bowl)


def test_empty_zero_set_is_an_error():
    shifted = FieldSpec(lambda x, y: 2 + y, lambda x, y: (0 * x, 1 + 0 * y), name="shifted")
    with pytest.raises(EmptyZeroSetError):
        extract_gamma(shifted)
    assert lhs_area_integral(shifted, GTAB, 1.0, 10.0)[0] == 0.0


def test_linear_lhs_matches_closed_form():
    for kappa in (50.0, 400.0):
        b = 0.5
        lhs, _ = lhs_area_integral(linear_field(), GTAB, b, kappa)
        assert lhs == pytest.approx(4 * I / (b * kappa), rel=1e-4)
        assert lhs <= 0


def test_lhs_refinement_is_converged():
    spec = curved_field(0.25)
    a, info = lhs_area_integral(spec, GTAB, 0.5, 200.0)
    b, _ = lhs_area_integral(spec, GTAB, 0.5, 200.0, refine=2 * info["refine"])
    assert abs(a - b) <= 1e-4 * abs(b)


def test_lhs_requires_thin_tube():
    with pytest.raises(ValueError):
        lhs_area_integral(linear_field(), GTAB, 0.1, 5.0)


def test_rhs_simple_sources():
    c = extract_gamma(tilted_field(0.3), 50)
    assert rhs_curve_integral(c, lambda L: 0 * L, 0.2, 100.0) == 0.0
    E = E_asymptotic(I)
    s = np.sqrt(1.09)
    want = c.length * (0.2 * s) ** (1 / 3) * float(E(0.2 * s)) / 100.0
    assert rhs_curve_integral(c, E, 0.2, 100.0) == pytest.approx(want, rel=1e-12)


def test_surrogate_cross_check_on_linear_field():
    rep = verify_coarea(linear_field(), GTAB, "asymptotic", [100.0, 1000.0],
                        require_decrease=False)
    for row in rep["rows"]:
        assert row["relative"] < 1e-3
        assert row["lhs"] <= 0 and row["rhs"] <= 0
    scaled = [r["lhs_scaled"] for r in rep["rows"]]
    assert max(scaled) - min(scaled) <= 1e-6 * 4 * abs(I) + 1e-3 * 4 * abs(I)


def test_unknown_source_rejected():
    with pytest.raises(ValueError):
        make_E_source("nope")
    with pytest.raises(ValueError):
        make_E_source("asymptotic")


def test_sampled_field_reproduces_a_line(tmp_path):
    h = 0.1
    xs = -1 + h * np.arange(21)
    X, Y = np.meshgrid(xs, xs)
    vals = Y - 0.3 * X
    path = tmp_path / "field.csv"
    with open(path, "w") as fh:
        fh.write("nx,ny,x0,y0,h\n21,21,-1.0,-1.0,0.1\n")
        for row in vals:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
    (tmp_path / "desc.json").write_text(json.dumps({"grid_csv": "field.csv"}))
    spec = field_from_descriptor(tmp_path / "desc.json")
    c = extract_gamma(spec, 50)
    assert c.length == pytest.approx(2 * np.sqrt(1.09), abs=1e-8)
    np.testing.assert_allclose(c.grad_norms[0], np.sqrt(1.09), rtol=1e-6)
    direct = sampled_field(vals, -1.0, -1.0, h)
    assert direct(0.33, 0.1) == pytest.approx(0.1 - 0.3 * 0.33, abs=1e-12)


def test_descriptor_builtins():
    spec = field_from_descriptor({"builtin": "tilted", "params": {"slope": 0.5}})
    assert spec(1.0, 0.5) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        field_from_descriptor({"builtin": "spiral"})
    with pytest.raises(ValueError):
        field_from_descriptor({})
