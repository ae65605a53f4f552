import json

import pytest

from glref import config
from glref.cli import main


def test_test_fit_recovers_intercept(capsys):
    assert main(["estimate-E", "--test-fit", "--R-list", "4,8,12"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert abs(out["E_est"] + 1.0) < 1e-10


def test_snapped_grid_writes_zero_row(tmp_path):
    assert main(["tabulate-g", "--fast", "--b-grid", "1.5", "--out", str(tmp_path)]) == 0
    lines = [l for l in (tmp_path / "gtable.csv").read_text().splitlines()
             if not l.startswith("#")]
    assert len(lines) == 2
    row = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert float(row["b"]) == 1.5 and float(row["g_est"]) == 0.0


def test_verify_gauge_suite(tmp_path):
    assert main(["verify", "--fast", "--suite", "gauge,gradient", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "verify_report.json").read_text())
    assert rep["passed"] and [s["suite"] for s in rep["suites"]] == ["gauge", "gradient"]


@pytest.mark.parametrize("argv", [
    ["verify", "--suite", "nope"],
    ["tabulate-g", "--b-grid", "0.5,abc"],
    ["tabulate-g", "--b-grid", "-0.5"],
    ["frobnicate"],
    ["verify", "--suite", "coarea-tilted", "--field", "/nonexistent.json"],
])
def test_bad_input_exits_with_two(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)] if argv[0] != "frobnicate" else argv) == 2


def test_config_file_layers(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"profile": "fast", "tabulate-g": {"r_list": [5.0, 7.0]}}))
    cfg = config.resolve("tabulate-g", None, config.load_config_file(path), {"seed": 3})
    assert cfg["profile"] == "fast" and cfg["r_list"] == [5.0, 7.0] and cfg["seed"] == 3
    path.write_text(json.dumps({"tabulate-g": {"colour": 1}}))
    with pytest.raises(config.ConfigError):
        config.resolve("tabulate-g", None, config.load_config_file(path))
    assert main(["tabulate-g", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_scrub_drops_timing():
    doc = {"a": 1, "wall_time": 2.0, "runs": [{"trace": [1], "energy": -1.0}]}
    assert config.scrub(doc) == {"a": 1, "runs": [{"energy": -1.0}]}


def test_small_runs_are_reproducible(tmp_path):
    argv = ["tabulate-g", "--fast", "--b-grid", "0.6,1.2", "--r-list", "4,4.5,5"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == 0
    assert main(argv + ["--out", str(tmp_path / "b")]) == 0
    for name in ("gtable.csv", "gtable.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
