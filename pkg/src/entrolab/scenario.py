"""Scenario files: loading, schema validation and object construction."""
import json
from dataclasses import replace
from functools import lru_cache
from importlib import resources

import numpy as np
from jsonschema import Draft202012Validator

from .action import Window
from .dlm import make_path, straight_path
from .errors import ScenarioError
from .fields import (Bump, constant_field, make_expansion_shock, perturb_field,
                     piecewise_constant, rozhdestvenskii_wave, solve_riemann_euler,
                     solve_riemann_scalar)
from .systems import get_pair, get_system


@lru_cache(maxsize=None)
def load_schema(name):
    text = resources.files("entrolab").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _where(err):
    path = "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
    schema_path = "/".join(str(p) for p in err.absolute_schema_path)
    return f"{path}: {err.message} (schema path: {schema_path})"


def validate(doc, name="scenario"):
    """Raise ScenarioError listing every schema violation of ``doc``."""
    validator = Draft202012Validator(load_schema(name))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise ScenarioError("; ".join(_where(e) for e in errors))
    return doc


def load_scenario(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: "
                            f"{exc.msg}") from None
    return validate(doc)


def build_system(sc):
    spec = sc["system"]
    try:
        return get_system(spec["id"], **spec.get("params", {}))
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"$.system: {exc}") from None


def build_pairs(system, sc):
    specs = sc.get("pairs")
    if not specs:
        return system.pairs()
    out = []
    for i, p in enumerate(specs):
        try:
            out.append(get_pair(system, p["id"], shift=p.get("shift"), **p.get("params", {})))
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"$.pairs[{i}]: {exc}") from None
    return out


def build_window(spec):
    return Window(float(spec["t1"]), float(spec["t2"]), float(spec["a"]), float(spec["b"]))


def build_bump(spec):
    return Bump(tuple(spec["center"]), tuple(spec["radii"]), tuple(spec["direction"]),
                float(spec.get("amplitude", 0.0)))


def build_path(spec, system=None):
    if spec is None:
        return straight_path()
    return make_path(spec["kind"], controls=spec.get("controls"), offsets=spec.get("offsets"),
                     order=spec.get("order"), system=system)


def build_paths(sc, system=None):
    specs = sc.get("paths") or [{"kind": "straight"}]
    return [build_path(s, system) for s in specs]


def _need(spec, key, where):
    if key not in spec:
        raise ScenarioError(f"{where}: missing {key!r}")
    return spec[key]


def build_field(system, spec, where="$.fields[0]"):
    """Construct a field from its scenario description."""
    kind = spec["kind"]
    label = spec.get("label", kind)
    x0 = float(spec.get("x0", 0.0))
    branches = tuple(spec.get("branches", ("auto", "auto")))
    variables = spec.get("variables", "primitive")
    if kind == "constant":
        fld = constant_field(system, _need(spec, "state", where))
    elif kind == "riemann":
        left, right = _need(spec, "left", where), _need(spec, "right", where)
        if system.id == "euler":
            fld = solve_riemann_euler(system, left, right, branches, x0=x0, variables=variables)
        elif system.N == 1:
            fld = solve_riemann_scalar(system, left, right, x0=x0)
        else:
            raise ScenarioError(f"{where}: no Riemann solver for {system.id}")
    elif kind == "expansion_shock":
        left, right = _need(spec, "left", where), _need(spec, "right", where)
        if system.id == "euler":
            if "branches" not in spec:
                branches = ("shock", "shock")
            fld = solve_riemann_euler(system, left, right, branches, x0=x0, variables=variables)
        else:
            fld = make_expansion_shock(system, left, right, x0=x0)
    elif kind == "custom_piecewise":
        fld = piecewise_constant(system, _need(spec, "states", where),
                                 _need(spec, "speeds", where), x0=x0)
    elif kind == "traveling_wave":
        if system.id != "rozhdestvenskii":
            raise ScenarioError(f"{where}: traveling waves are available for rozhdestvenskii only")
        w = spec.get("wave", {})
        fld = rozhdestvenskii_wave(c=w.get("speed", 0.5), b=w.get("middle", 1.0),
                                   level=w.get("level", 1.0), amp=w.get("amplitude", 0.5),
                                   width=w.get("width", 1.0))
    else:
        raise ScenarioError(f"{where}: unknown field kind {kind!r}")
    fld = replace(fld, label=label)
    if "bump" in spec:
        fld = perturb_field(fld, build_bump(spec["bump"]))
    return fld


def rng_for(sc, seed=None):
    seed = sc.get("seed", 0) if seed is None else seed
    return np.random.default_rng(seed), seed
