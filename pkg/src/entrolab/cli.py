"""Command-line front end: ``entrolab <command> --scenario file.json``.

Exit codes: 0 success, 1 a check or expectation failed, 2 invalid input.
"""
import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import action as act
from . import dlm
from . import selection as sel
from . import structure as st
from .errors import EntrolabError, ScenarioError
from .fields import field_summary, sample_field
from .scenario import (build_bump, build_field, build_pairs, build_paths, build_system,
                       build_window, load_scenario, rng_for, validate)
from .systems import REGISTRY

SCHEMA_VERSION = "1.0"
CSV_HEADER = ["command", "system", "item", "metric", "value", "threshold", "verdict"]


class InputError(Exception):
    pass


@dataclass
class Context:
    command: str
    scenario: Optional[dict]
    seed: Optional[int]
    jobs: int
    quad_order: Optional[int]
    out: Optional[str]
    figures: bool

    def pmap(self, fn, items):
        items = list(items)
        if self.jobs > 1 and len(items) > 1:
            with ThreadPoolExecutor(self.jobs) as pool:
                return list(pool.map(fn, items))
        return [fn(x) for x in items]


class Outcome:
    """Collects results, ledger rows, failures and figures for one command."""

    def __init__(self, system=None, params=None):
        self.results = {}
        self.rows = []
        self.failures = []
        self.figures = []
        self.system = system
        self.params = params or {}
        self.table = ""

    def row(self, item, metric, value, threshold=None, verdict=""):
        self.rows.append([item, metric, value, threshold, verdict])


# -- JSON helpers ---------------------------------------------------------

def jsonable(obj):
    """Convert numpy and dataclass-derived values to plain JSON data."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def dumps(report):
    return json.dumps(jsonable(report), indent=2, allow_nan=False) + "\n"


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


# -- commands -------------------------------------------------------------

def cmd_systems(ctx):
    out = Outcome()
    rows = []
    for sid, factory in REGISTRY.items():
        system = factory()
        rows.append({"id": sid, "N": system.N, "d": system.d,
                     "conservative": system.conservative,
                     "params": dict(system.params),
                     "pairs": sorted(system.pair_factories),
                     "description": system.description})
    out.results = {"systems": rows}
    lines = [f"{'id':<18}{'N':>3}{'d':>3}  {'flux':<6}pairs"]
    for r in rows:
        lines.append(f"{r['id']:<18}{r['N']:>3}{r['d']:>3}  "
                     f"{'yes' if r['conservative'] else 'no':<6}{', '.join(r['pairs']) or '-'}")
    out.table = "\n".join(lines)
    return out


def _homogeneity_expected(system, pair):
    if system.id == "euler" and pair is not None and pair.id == "homogeneous":
        return {"entropy_vars": st.euler_entropy_vars_degree(system.params["gamma"],
                                                             pair.params["alpha"])}
    return {}


def cmd_check(ctx):
    sc = ctx.scenario
    system = build_system(sc)
    pairs = build_pairs(system, sc)
    rng, _ = rng_for(sc, ctx.seed)
    cfg = sc.get("checks", {})
    out = Outcome(system.id, system.params)
    if system.sampler is None:
        raise InputError(f"{system.id} has no state sampler")
    states = system.sample(rng, cfg.get("states", 100))
    n_god = cfg.get("godunov", 0)
    god_states = system.sample(rng, n_god) if n_god else None

    def run_pair(pair):
        reps = []
        strict = pair.convexity == "strict"
        if cfg.get("entropy_pair", True):
            reps.append(st.check_entropy_pair(system, pair, states))
        if cfg.get("symmetrizer", True) and strict:
            reps.append(st.check_symmetrizer(system, pair, states))
        if god_states is not None and strict and system.conservative:
            reps.append(st.check_godunov_potentials(system, pair, god_states))
        if cfg.get("convexity", True) and strict:
            grid = st.default_lambda_grid() if (cfg.get("lambda_grid") or pair.id == "lambda") \
                and "lambda" in system.pair_factories else None
            reps.append(st.check_convexity(system, pair, states, lam_grid=grid))
        if "homogeneity" in cfg and pair.id == "homogeneous":
            h = cfg["homogeneity"]
            reps.append(st.check_homogeneity(
                system, states[:h.get("states", 5)], tuple(h.get("scalings", (0.5, 2.0, 10.0))),
                pair=pair, expected=_homogeneity_expected(system, pair)))
        return reps

    reports = [r for group in ctx.pmap(run_pair, pairs) for r in group]
    if "homogeneity" in cfg:
        h = cfg["homogeneity"]
        reports.insert(0, st.check_homogeneity(
            system, states[:h.get("states", 5)], tuple(h.get("scalings", (0.5, 2.0, 10.0))),
            expected=h.get("expected")))
    out.results["checks"] = [r.to_dict() for r in reports]
    for r in reports:
        out.row(r.check_id, "max_residual", r.max_residual, r.threshold, r.verdict)
        if not r.passed:
            out.failures.append(f"{r.check_id}: residual {r.max_residual:.3e} > {r.threshold:g}")
    if cfg.get("search"):
        search = st.symmetrizer_search(system, system.sample(rng, cfg.get("search_states", 20)),
                                       pairs=pairs)
        out.results["search"] = search.to_dict()
        out.row("symmetrizer_search", "verdict", search.verdict, None, search.qualifier)
        expect = cfg.get("expect", {}).get("search_verdict")
        if expect and expect != search.verdict:
            out.failures.append(f"symmetrizer_search: expected {expect}, found {search.verdict} "
                                f"({search.qualifier})")
    if ctx.figures:
        from .plotting import check_residuals
        out.figures.append(check_residuals(reports, ctx.out))
    return out


def _riemann_spec(sc):
    if "riemann" not in sc:
        raise InputError("scenario has no 'riemann' section")
    spec = dict(sc["riemann"])
    spec.setdefault("kind", "riemann")
    sample_t = spec.pop("sample_time", 1.0)
    return spec, sample_t


def cmd_riemann(ctx):
    sc = ctx.scenario
    system = build_system(sc)
    spec, t = _riemann_spec(sc)
    fld = build_field(system, spec, "$.riemann")
    out = Outcome(system.id, system.params)
    summary = field_summary(fld)
    xs = np.linspace(-1.0, 1.0, 11) * max(1.0, t) + fld.x0
    summary["profile"] = {"t": t, "x": xs,
                          "u": sample_field(fld, np.full_like(xs, t), xs, side=-1)}
    out.results["field"] = summary
    for k, w in enumerate(summary["waves"]):
        if w["type"] == "discontinuity":
            out.row(w["label"], "speed", w["speed"], None, "exact" if w["exact"] else "inexact")
        else:
            out.row(w["label"], "head_speed", w["head_speed"])
    for key in ("p_star", "v_star"):
        if key in fld.meta:
            out.row("star", key, fld.meta[key])
    if ctx.figures:
        from .plotting import field_profile
        out.figures.append(field_profile(fld, t, xs[0], xs[-1], ctx.out))
    return out


def _fields(sc, system):
    if "fields" not in sc:
        raise InputError("scenario has no 'fields' section")
    return [build_field(system, f, f"$.fields[{i}]") for i, f in enumerate(sc["fields"])]


def cmd_action(ctx):
    sc = ctx.scenario
    system = build_system(sc)
    pairs = build_pairs(system, sc)
    fields = _fields(sc, system)
    if "windows" not in sc:
        raise InputError("scenario has no 'windows' section")
    windows = [build_window(w) for w in sc["windows"]]
    path = build_paths(sc, system)[0]
    order = ctx.quad_order or act.SPACE_TIME_ORDER
    out = Outcome(system.id, system.params)
    jobs = [(f, p, w) for f in fields for p in pairs for w in windows]

    def run(job):
        f, p, w = job
        rep = act.action_interior(system, p, f, w, path, order=order).to_dict()
        if system.conservative:
            rep["weak_residual"] = act.weak_residual(system, f, w)
        return rep

    reports = ctx.pmap(run, jobs)
    out.results["actions"] = reports
    for rep in reports:
        item = f"{rep['field']}|{rep['pair']}|{rep['window']}"
        out.row(item, "total", rep["total"])
        disc = rep["route_discrepancy"]
        if disc is not None:
            thr = 1e-8 * (1.0 + abs(rep["total"]))
            ok = disc <= thr
            out.row(item, "route_discrepancy", disc, thr, "pass" if ok else "fail")
            if not ok:
                out.failures.append(f"{item}: route discrepancy {disc:.3e}")
    if "variation" in sc:
        v = sc["variation"]
        bump = build_bump(v["bump"])
        eps = v.get("eps", act.DEFAULT_EPS)
        var_jobs = [(f, p) for f in fields for p in pairs]
        var = ctx.pmap(lambda j: act.first_variation(system, j[1], j[0], bump, windows[0], eps,
                                                     path, order), var_jobs)
        out.results["variations"] = [r.to_dict() for r in var]
        for (f, p), r in zip(var_jobs, var):
            item = f"{f.label}|{p.label()}"
            out.row(item, "max_abs_delta", r.max_abs, r.details["zero_tol"], r.verdict)
            out.row(item, "fitted_order", r.fitted_order)
            if v.get("expect") and v["expect"] != r.verdict:
                out.failures.append(f"{item}: expected {v['expect']}, found {r.verdict}")
        if ctx.figures and var:
            from .plotting import variation_plot
            out.figures.append(variation_plot(var[0], ctx.out))
    if ctx.figures:
        from .plotting import wave_diagram
        extra = (build_bump(sc["variation"]["bump"]),) if "variation" in sc else ()
        for i, f in enumerate(fields):
            out.figures.append(wave_diagram(f, windows[0], ctx.out, f"action_field{i}.png", extra))
    return out


def cmd_compare(ctx):
    sc = ctx.scenario
    system = build_system(sc)
    pair = build_pairs(system, sc)[0]
    fields = _fields(sc, system)
    if "compare" not in sc:
        raise InputError("scenario has no 'compare' section")
    cfg = sc["compare"]
    labels = [f.label for f in fields]
    if len(set(labels)) != len(labels):
        raise InputError("compare needs distinct field labels")
    cands = [sel.Candidate(f.label, f) for f in fields]
    path = build_paths(sc, system)[0]
    t = float(cfg["time"])
    if cfg.get("mode", "local") == "global":
        rep = sel.rank_global(system, pair, cands, t, path)
    else:
        if "interval" in cfg:
            a, b = cfg["interval"]
        elif "windows" in sc:
            a, b = sc["windows"][0]["a"], sc["windows"][0]["b"]
        else:
            raise InputError("local comparison needs 'compare.interval' or a window")
        rep = sel.rank_local_maxent(system, pair, cands, t, a, b, path)
    out = Outcome(system.id, system.params)
    out.results["ranking"] = rep.to_dict()
    for lab in rep.ordering:
        out.row(lab, "rate", rep.rates[lab], None, "selected" if lab in rep.selected else "")
    expect = cfg.get("expect_selected")
    if expect is not None and sorted(expect) != sorted(rep.selected):
        out.failures.append(f"expected selection {expect}, found {rep.selected}")
    width = max(len(k) for k in rep.ordering) + 2
    lines = [f"{'candidate':<{width}}{'rate':>24}  selected"]
    for lab in rep.ordering:
        lines.append(f"{lab:<{width}}{rep.rates[lab]:>24.17g}  {'*' if lab in rep.selected else ''}")
    if rep.ties:
        lines.append("ties: " + "; ".join(", ".join(g) for g in rep.ties))
    out.table = "\n".join(lines)
    if ctx.figures:
        from .plotting import ranking_plot
        out.figures.append(ranking_plot(rep, ctx.out))
    return out


def _integrand(kind, system, pair):
    if kind == "identity":
        return lambda p: p
    if kind == "shear":
        if system.N < 2:
            raise InputError("shear integrand needs N >= 2")
        return lambda p: np.concatenate([p[:, 1:2], np.zeros_like(p[:, 1:])], axis=1)
    if kind == "entropy_gradient":
        return pair.grad
    raise InputError(f"unknown integrand {kind!r}")


def cmd_path_product(ctx):
    sc = ctx.scenario
    system = build_system(sc)
    cfg = sc.get("path_product")
    if cfg is None:
        raise InputError("scenario has no 'path_product' section")
    kind = cfg.get("integrand", "identity")
    pair = build_pairs(system, sc)[0] if kind in ("entropy_gradient", "shock_production") else None
    paths = build_paths(sc, system)
    rng, _ = rng_for(sc, ctx.seed)
    order = ctx.quad_order or 16
    jumps = [dict(j) for j in cfg["jumps"]]
    for _ in range(cfg.get("random_jumps", 0)):
        um, up = system.sample(rng, 2)
        jumps.append({"left": um.tolist(), "right": up.tolist()})
    for i, j in enumerate(jumps):
        if len(j["left"]) != system.N or len(j["right"]) != system.N:
            raise InputError(f"jump {i}: states need {system.N} components")

    def run(j):
        um, up = np.asarray(j["left"], float), np.asarray(j["right"], float)
        for p in paths:
            if system.admissible is not None:
                dlm.probe_path(system, p, um, up, order)
        if kind == "shock_production":
            if "speed" in j:
                sigma = float(j["speed"])
            elif system.N == 1 and system.conservative:
                sigma = float((system.flux(up, 0) - system.flux(um, 0))[0] / (up - um)[0])
            else:
                raise InputError("shock_production jumps need a 'speed'")
            vals = [dlm.shock_entropy_production(system, pair, sigma, um, up, j.get("normal"),
                                                 p, order) for p in paths]
            spread = float(np.ptp(vals))
            verdict = "path-independent" if spread <= dlm.SPREAD_TOL else "path-dependent"
            return {"left": um, "right": up, "speed": sigma,
                    "values": [{"path": p.id, "value": v} for p, v in zip(paths, vals)],
                    "max_spread": spread, "verdict": verdict}
        probe = dlm.perfect_derivative_probe(_integrand(kind, system, pair), paths, um, up, order)
        return {"left": um, "right": up,
                "values": [{"path": a.path_id, "value": a.value,
                            "quadrature_order": a.quadrature_order,
                            "error_estimate": a.error_estimate} for a in probe.values],
                "max_spread": probe.max_spread, "verdict": probe.verdict}

    res = ctx.pmap(run, jumps)
    out = Outcome(system.id, system.params)
    out.results = {"integrand": kind, "paths": [p.id for p in paths], "jumps": res}
    expect = cfg.get("expect")
    for i, r in enumerate(res):
        out.row(f"jump{i}", "max_spread", r["max_spread"], dlm.SPREAD_TOL, r["verdict"])
        if expect and r["verdict"] != expect:
            out.failures.append(f"jump{i}: expected {expect}, found {r['verdict']}")
    if ctx.figures:
        from .plotting import paths_plot
        out.figures.append(paths_plot(paths, jumps[0]["left"], jumps[0]["right"], ctx.out))
    return out


COMMANDS = {
    "systems": cmd_systems,
    "check": cmd_check,
    "riemann": cmd_riemann,
    "action": cmd_action,
    "compare": cmd_compare,
    "path-product": cmd_path_product,
}


# -- driver ---------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="entrolab",
        description="Entropy structure checks, path products, action functionals and "
                    "entropy-rate ranking for hyperbolic conservation laws.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--scenario", help="scenario JSON file")
    parser.add_argument("--out", help="directory for reports, ledger and figures")
    parser.add_argument("--csv", action="store_true", help="append summary rows to OUT/ledger.csv")
    parser.add_argument("--jobs", type=int, default=1, help="worker threads (default 1)")
    parser.add_argument("--seed", type=int, help="override the scenario seed")
    parser.add_argument("--quad-order", type=int, help="override quadrature orders")
    parser.add_argument("--figures", action="store_true", help="write PNG figures to OUT")
    return parser


def build_report(ctx, outcome):
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": ctx.command,
        "status": "fail" if outcome.failures else "ok",
        "system": outcome.system,
        "params": dict(outcome.params),
        "seed": None if ctx.scenario is None else rng_for(ctx.scenario, ctx.seed)[1],
        "quad_order": ctx.quad_order,
        "results": outcome.results,
        "failures": outcome.failures,
    }
    report = jsonable(report)
    validate(report, "report")
    return report


def append_ledger(path, command, system, rows):
    new = not os.path.exists(path)
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(CSV_HEADER)
        for item, metric, value, thr, verdict in rows:
            w.writerow([command, system or "", item, metric, _fmt(value), _fmt(thr), verdict])


def run(argv=None):
    """Run one command and return ``(exit_code, report_or_None)``."""
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2, None
    if args.quad_order is not None and args.quad_order < 2:
        print("error: --quad-order must be >= 2", file=sys.stderr)
        return 2, None
    if (args.csv or args.figures) and not args.out:
        print("error: --csv and --figures need --out", file=sys.stderr)
        return 2, None
    try:
        scenario = None
        if args.command != "systems":
            if not args.scenario:
                raise InputError(f"{args.command} needs --scenario")
            scenario = load_scenario(args.scenario)
        if args.out:
            os.makedirs(args.out, exist_ok=True)
        ctx = Context(args.command, scenario, args.seed, args.jobs, args.quad_order,
                      args.out, args.figures)
        outcome = COMMANDS[args.command](ctx)
        report = build_report(ctx, outcome)
    except (ScenarioError, InputError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2, None
    except EntrolabError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1, None
    except (ValueError, KeyError, TypeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2, None
    text = dumps(report)
    if args.out:
        name = args.command.replace("-", "_") + ".json"
        with open(os.path.join(args.out, name), "w") as fh:
            fh.write(text)
        if outcome.table:
            print(outcome.table)
    else:
        if args.command == "systems":
            print(outcome.table)
        else:
            sys.stdout.write(text)
            if outcome.table:
                print(outcome.table, file=sys.stderr)
    if args.csv:
        append_ledger(os.path.join(args.out, "ledger.csv"), args.command, outcome.system,
                      outcome.rows)
    for msg in outcome.failures:
        print(f"FAIL {msg}", file=sys.stderr)
    return (1 if outcome.failures else 0), report


def main(argv=None):
    return run(argv)[0]


if __name__ == "__main__":
    sys.exit(main())
