"""Command-line entry point ``glref``.

    glref tabulate-g  [--fast | --paper] [--b-grid 0.1,0.2] [--out DIR]
    glref estimate-E  [--fast | --paper] [--L-list 0.2,0.1] [--test-fit]
    glref verify      [--fast | --paper] [--suite gauge,thm13 | all]

Exit status: 0 all checks pass, 1 a check failed, 2 bad configuration or input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import verify as V
from .config import ConfigError, dumps, scrub, version
from .gfunc import (
    TaintedTableError, gtable_from_csv, gtable_from_json, gtable_to_csv, integral_g, tabulate_g,
)
from .parallel import default_jobs
from .strip import (
    ETable, etable_from_csv, etable_from_json, etable_to_csv, fit_strip, tabulate_E,
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from exc


def _progress(label):
    def report(i, n):
        print(f"[{label}] {i}/{n}", file=sys.stderr, flush=True)
    return report


def _stamped_csv(body: str, cfg: dict) -> str:
    compact = json.dumps(scrub(cfg), sort_keys=True, separators=(",", ":"))
    head = f"# glref {version()}\n# config {compact}\n"
    return head + body


def _write(out: Path, name: str, text: str):
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _load_table(path, kind):
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {kind} table {path}: {exc}") from exc
    if kind == "g":
        return gtable_from_json(text) if p.suffix == ".json" else gtable_from_csv(text)
    return etable_from_json(text) if p.suffix == ".json" else etable_from_csv(text)


# -- commands --------------------------------------------------------------

def run_tabulate_g(cfg, out: Path, jobs=None) -> int:
    table = tabulate_g(cfg["b_grid"], cfg["r_list"], seed=cfg["seed"], n_random=cfg["n_random"],
                       n_starts=cfg["n_starts"], resolution=cfg["resolution"],
                       levels=cfg["levels"], check_snapped=cfg["check_snapped"], jobs=jobs,
                       progress=_progress("tabulate-g"))
    summary = {"version": version(), "config": cfg, "C_fit": table.C_fit}
    try:
        I, err = integral_g(table, allow_gaps=not cfg["strict"])
        summary.update({"I": I, "I_err": err})
    except (TaintedTableError, ValueError) as exc:
        summary["integral_error"] = str(exc)
    summary["samples"] = table.samples
    _write(out, "gtable.csv", _stamped_csv(gtable_to_csv(table), cfg))
    _write(out, "gtable.json", dumps(_as_plain(summary)))
    tainted = [s.b for s in table.samples if s.tainted]
    print(f"g table: {len(table.samples)} rows, I = {summary.get('I')}, "
          f"err = {summary.get('I_err')}, tainted = {tainted}")
    return EXIT_FAIL if cfg["strict"] and tainted else EXIT_OK


def run_estimate_E(cfg, out: Path, jobs=None) -> int:
    table = tabulate_E(cfg["L_list"], cfg["R_list"], seed=cfg["seed"], n_random=cfg["n_random"],
                       n_starts=cfg["n_starts"], resolution=cfg["resolution"],
                       levels=cfg["levels"], jobs=jobs, progress=_progress("estimate-E"))
    _write(out, "etable.csv", _stamped_csv(etable_to_csv(table), cfg))
    _write(out, "etable.json", dumps(_as_plain({"version": version(), "config": cfg,
                                                "samples": table.samples})))
    ok = True
    for s in table.samples:
        worst = min(e / R for e, R in zip(s.e_gs, s.R_list))
        ok &= s.E_est <= worst + 1e-6 and not s.tainted
        print(f"L = {s.L}: E_est = {s.E_est:.6f} (err {s.err_est:.3g}), min e/R = {worst:.6f}")
    return EXIT_OK if ok else EXIT_FAIL


def run_test_fit(R_list) -> int:
    R = np.asarray(R_list, dtype=float)
    fit = fit_strip(R, (-1.0 + R ** (-2.0 / 3.0)) * R)
    gap = abs(fit["E"] + 1.0)
    print(dumps({"R_list": list(R_list), "E_est": fit["E"], "c": fit["c"], "error": gap}), end="")
    return EXIT_OK if gap < 1e-10 else EXIT_FAIL


def _tables_for(cfg, suites, args, jobs):
    gt = et = None
    if any(s in suites for s in ("thm13", "coarea-linear", "coarea-tilted")):
        if args.gtable:
            gt = _load_table(args.gtable, "g")
        else:
            gcfg = cfgmod.resolve("tabulate-g", cfg["profile"])
            gt = tabulate_g(gcfg["b_grid"], gcfg["r_list"], seed=cfg["seed"],
                            n_random=gcfg["n_random"], n_starts=gcfg["n_starts"],
                            levels=gcfg["levels"], jobs=jobs, progress=_progress("g"))
    if any(s in suites for s in ("strip", "thm13", "coarea-tilted")):
        if args.etable:
            et = _load_table(args.etable, "E")
        else:
            ecfg = cfgmod.resolve("estimate-E", cfg["profile"])
            et = tabulate_E(cfg["L_list"], ecfg["R_list"], seed=cfg["seed"],
                            n_random=ecfg["n_random"], n_starts=ecfg["n_starts"],
                            levels=ecfg["levels"], jobs=jobs, progress=_progress("E"))
    return gt, et


def run_verify(cfg, out: Path, args, jobs=None) -> int:
    wanted = V.SUITES if cfg["suite"] == "all" else tuple(cfg["suite"].split(","))
    unknown = [s for s in wanted if s not in V.SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s) {unknown}; choose from {list(V.SUITES)}")
    n_starts = 2 if cfg["profile"] == "fast" else None
    gt, et = _tables_for(cfg, wanted, args, jobs)
    results = []
    for name in wanted:
        print(f"[verify] {name}", file=sys.stderr, flush=True)
        if name == "gauge":
            r = V.gauge(cfg["seed"])
        elif name == "gradient":
            r = V.gradient_suite(cfg["seed"])
        elif name == "inequalities":
            r = V.inequalities(cfg["lattice_b"], cfg["lattice_r"], cfg["seed"], n_starts)
        elif name == "lemma24":
            r = V.lemma24(cfg["frontier_b"], cfg["frontier_r"], cfg["seed"], n_starts)
        elif name == "eigen":
            r = V.eigen(tuple(cfg["eigen_h"]))
        elif name == "strip":
            strip_table = ETable([s for s in et.samples if s.L in (0.2, 0.1)], et.config)
            r = V.strip_suite(strip_table, seed=cfg["seed"], n_starts=n_starts)
        elif name == "thm13":
            r = V.thm13(gt, et)
        elif name == "coarea-linear":
            r = V.coarea_linear(gt, cfg["kappas"][:2], cfg["b_scale"])
        else:
            r = V.coarea_tilted(gt, et, cfg["field"], cfg["kappas"], cfg["b_scale"])
        print(f"{name}: {'PASS' if r['passed'] else 'FAIL'}")
        results.append(r)
    passed = all(r["passed"] for r in results)
    _write(out, "verify_report.json", dumps(_as_plain(
        {"version": version(), "config": cfg, "passed": passed, "suites": results})))
    return EXIT_OK if passed else EXIT_FAIL


def _as_plain(obj):
    if hasattr(obj, "__dataclass_fields__"):
        return {k: _as_plain(getattr(obj, k)) for k in obj.__dataclass_fields__}
    if isinstance(obj, dict):
        return {k: _as_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_as_plain(v) for v in obj]
    return obj


# -- argument parsing ------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="glref", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"glref {version()}")
    common = argparse.ArgumentParser(add_help=False)
    prof = common.add_mutually_exclusive_group()
    prof.add_argument("--fast", dest="profile", action="store_const", const="fast")
    prof.add_argument("--paper", dest="profile", action="store_const", const="paper")
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--jobs", type=int, help="worker processes (default: $GLREF_JOBS or 1)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", default=".", help="output directory")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("tabulate-g", parents=[common], help="tabulate g(b)")
    g.add_argument("--b-grid", type=_floats)
    g.add_argument("--r-list", type=_floats)
    g.add_argument("--resolution", type=float)
    g.add_argument("--strict", action="store_true", default=None)
    g.add_argument("--check-snapped", action="store_true", default=None)

    e = sub.add_parser("estimate-E", parents=[common], help="estimate E(L)")
    e.add_argument("--L-list", type=_floats)
    e.add_argument("--R-list", type=_floats)
    e.add_argument("--resolution", type=float)
    e.add_argument("--test-fit", action="store_true",
                   help="fit synthetic E + c R^(-2/3) data instead of solving")

    v = sub.add_parser("verify", parents=[common], help="run invariant suites")
    v.add_argument("--suite", help=f"comma list from {', '.join(V.SUITES)}, or all")
    v.add_argument("--L-list", type=_floats)
    v.add_argument("--kappas", type=_floats)
    v.add_argument("--field", help="JSON field descriptor for coarea-tilted")
    v.add_argument("--gtable", help="existing g table (CSV or JSON)")
    v.add_argument("--etable", help="existing E table (CSV or JSON)")
    return p


_OVERRIDES = {
    "tabulate-g": ("seed", "b_grid", "r_list", "resolution", "strict", "check_snapped"),
    "estimate-E": ("seed", "L_list", "R_list", "resolution"),
    "verify": ("seed", "suite", "L_list", "kappas"),
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    jobs = args.jobs if args.jobs is not None else default_jobs()
    out = Path(args.out)
    try:
        file_doc = cfgmod.load_config_file(args.config) if args.config else None
        overrides = {k: getattr(args, k) for k in _OVERRIDES[args.command]}
        if args.command == "verify" and args.field:
            overrides["field"] = cfgmod.load_field_descriptor(args.field)
        cfg = cfgmod.resolve(args.command, args.profile, file_doc, overrides)
        if args.command == "tabulate-g":
            return run_tabulate_g(cfg, out, jobs)
        if args.command == "estimate-E":
            if args.test_fit:
                return run_test_fit(cfg["R_list"])
            return run_estimate_E(cfg, out, jobs)
        return run_verify(cfg, out, args, jobs)
    except (ConfigError, TaintedTableError, FileNotFoundError) as exc:
        print(f"glref: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"glref: invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
