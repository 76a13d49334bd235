"""Scenario files (YAML), a small safe expression language for benefits
and death rules, and report serialization.

A scenario file looks like::

    version: 1
    mode: rational
    market: {family: binomial, horizon: 1, up: 1, down: 1, p: 1/2, s0: 1}
    death: {family: independent, probs: [1/2]}
    claim: {term: 1, survival: "S_T > 1"}
    securitization: {instruments: [endowment, bond]}
    output: {format: csv, emit: [xi, L, V]}
"""
from __future__ import annotations

import ast
import csv
import io
import json
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np
import yaml

from .hedging import Claim
from .scenario import (
    Branch,
    ExplicitDeath,
    HazardDeath,
    IndependentDeath,
    Market,
    PathView,
    Scenario,
    ScenarioError,
    StoppingRule,
    binomial,
    build_space,
    explicit_tree,
    format_atom_key,
    product_market,
    two_driver,
)
from .space import exact, is_exact_scalar

SCHEMA_VERSION = 1
MARKET_FAMILIES = ("binomial", "two_driver", "product", "explicit", "random")
DEATH_FAMILIES = ("independent", "stopping", "hazard", "explicit", "random")


class ScenarioFileError(ValueError):
    """Malformed scenario document; carries the offending field and line."""

    def __init__(self, where: str, message: str, line: int | None = None):
        self.where = where
        self.line = line
        loc = f"{where} (line {line})" if line else where
        super().__init__(f"{loc}: {message}")


# -- expressions -------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow, ast.Mod: operator.mod}
_CMPOPS = {ast.Lt: operator.lt, ast.LtE: operator.le, ast.Gt: operator.gt, ast.GtE: operator.ge,
           ast.Eq: operator.eq, ast.NotEq: operator.ne}


def _flag(x) -> object:
    return exact(1) if x else exact(0)


_FUNCS = {
    "min": min,
    "max": max,
    "abs": abs,
    "indicator": _flag,
    "pos": lambda x: x if x > 0 else exact(0),
}


class Expression:
    """Arithmetic over named symbols, compiled once and evaluated exactly.

    Allowed: numbers, strings (for label comparisons), + - * / ** %,
    comparisons (yield 0/1), and/or/not, ``a if c else b`` and the
    functions min, max, abs, indicator, pos.
    """

    def __init__(self, text):
        self.text = str(text)
        try:
            self.tree = ast.parse(self.text, mode="eval")
        except SyntaxError as exc:
            raise ValueError(f"cannot parse expression {self.text!r}: {exc.msg}") from None
        self.names = set()
        for node in ast.walk(self.tree):
            self._admit(node)

    def _admit(self, node):
        ok = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Compare, ast.BoolOp, ast.IfExp,
              ast.Name, ast.Constant, ast.Call, ast.Load, ast.And, ast.Or, ast.Not,
              ast.USub, ast.UAdd, *_BINOPS, *_CMPOPS)
        if not isinstance(node, ok):
            raise ValueError(f"expression {self.text!r} uses unsupported syntax "
                             f"({type(node).__name__})")
        if isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS or node.keywords:
                raise ValueError(f"expression {self.text!r} calls an unknown function")
        elif isinstance(node, ast.Name) and node.id not in _FUNCS:
            self.names.add(node.id)
        elif isinstance(node, ast.Constant) and not isinstance(node.value, (int, float, str)):
            raise ValueError(f"expression {self.text!r} has an unsupported literal")

    def __call__(self, env: dict):
        return self._eval(self.tree.body, env)

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return node.value if isinstance(node.value, str) else exact(node.value)
        if isinstance(node, ast.Name):
            if node.id in _FUNCS:
                raise ValueError(f"{node.id} is a function")
            if node.id not in env:
                raise NameError(f"undefined symbol {node.id!r} in {self.text!r}")
            return env[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            v = self._eval(node.operand, env)
            if isinstance(node.op, ast.Not):
                return _flag(not v)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Compare):
            left = self._eval(node.left, env)
            for op, comp in zip(node.ops, node.comparators):
                right = self._eval(comp, env)
                if not _CMPOPS[type(op)](left, right):
                    return exact(0)
                left = right
            return exact(1)
        if isinstance(node, ast.BoolOp):
            vals = (self._eval(v, env) for v in node.values)
            hit = all(vals) if isinstance(node.op, ast.And) else any(vals)
            return _flag(hit)
        if isinstance(node, ast.IfExp):
            branch = node.body if self._eval(node.test, env) else node.orelse
            return self._eval(branch, env)
        if isinstance(node, ast.Call):
            return _FUNCS[node.func.id](*[self._eval(a, env) for a in node.args])
        raise ValueError(f"unsupported node {type(node).__name__}")


def path_env(view: PathView, t: int, T: int | None = None) -> dict:
    """Symbols visible to expressions on one path at time t.

    For each asset X: X (value at t), X_0, X_prev, dX, X_T (at the claim
    term), X_next and dX_next (one step ahead, when t < N). Also t, T, N,
    move (label of the step into t), move_next and path ("u/d/...").
    """
    m = view.market
    N = m.horizon
    env: dict[str, Any] = {"t": exact(t), "N": exact(N)}
    if T is not None:
        env["T"] = exact(T)
    labels = view.labels
    env["move"] = labels[t - 1] if t >= 1 else ""
    env["path"] = "/".join(labels[:t])
    if t < N:
        env["move_next"] = labels[t]
    for name in m.asset_names:
        env[name] = view.value(name, t)
        env[f"{name}_0"] = view.value(name, 0)
        env[f"{name}_prev"] = view.value(name, max(t - 1, 0))
        env[f"d{name}"] = view.increment(name, t)
        if T is not None:
            env[f"{name}_T"] = view.value(name, T)
        if t < N:
            env[f"{name}_next"] = view.value(name, t + 1)
            env[f"d{name}_next"] = view.increment(name, t + 1)
    return env


# -- number handling ---------------------------------------------------

def parse_number(x, where: str = "value"):
    if isinstance(x, bool):
        raise ScenarioFileError(where, f"expected a number, got {x!r}")
    try:
        return exact(x)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ScenarioFileError(where, f"expected a number or 'p/q' string, got {x!r}") from None


def format_exact(v) -> str:
    """'p/q' (or integer) string for an exact value; repr for floats."""
    if is_exact_scalar(v):
        f = Fraction(int(v.numerator), int(v.denominator))
        return str(f)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def format_decimal(v) -> str:
    return f"{float(v):.17g}"


# -- line diagnostics --------------------------------------------------

def _line_index(text: str) -> dict:
    """Map key paths to 1-based source lines."""
    out: dict = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return out

    def walk(node, path):
        out.setdefault(path, node.start_mark.line + 1)
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                walk(v, path + (str(k.value),))
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                walk(v, path + (str(i),))

    if root is not None:
        walk(root, ())
    return out


# -- parsing -----------------------------------------------------------

@dataclass
class ScenarioSpec:
    scenario: Scenario
    claim: Claim | None
    instruments: list = field(default_factory=list)
    output: dict = field(default_factory=dict)
    mode: str = "rational"
    document: dict = field(default_factory=dict)

    @property
    def bundle(self):
        return self.scenario.bundle


class _Ctx:
    def __init__(self, lines: dict):
        self.lines = lines

    def fail(self, path: tuple, message: str):
        where = ".".join(path) or "document"
        line = None
        for cut in range(len(path), -1, -1):
            line = self.lines.get(tuple(path[:cut]))
            if line:
                break
        raise ScenarioFileError(where, message, line)


def load_scenario_file(path, mode: str | None = None) -> ScenarioSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioFileError(str(path), f"cannot read file: {exc.strerror}") from None
    return parse_scenario_text(text, mode)


def parse_scenario_text(text: str, mode: str | None = None) -> ScenarioSpec:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioFileError("document", f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                                mark.line + 1 if mark else None) from None
    return parse_scenario(doc, mode, _line_index(text))


def parse_scenario(doc, mode: str | None = None, lines: dict | None = None) -> ScenarioSpec:
    ctx = _Ctx(lines or {})
    if not isinstance(doc, dict):
        ctx.fail((), "scenario must be a mapping")
    version = doc.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        ctx.fail(("version",), f"unsupported schema version {version!r}")
    unknown = set(doc) - {"version", "mode", "name", "market", "death", "claim",
                          "securitization", "output"}
    if unknown:
        ctx.fail((sorted(unknown)[0],), "unknown section")
    mode = mode or doc.get("mode", "rational")
    if mode not in ("rational", "float"):
        ctx.fail(("mode",), f"mode must be 'rational' or 'float', got {mode!r}")
    for key in ("market", "death"):
        if not isinstance(doc.get(key), dict):
            ctx.fail((key,), "missing or not a mapping")
    name = str(doc.get("name", ""))
    try:
        market, death, scenario = _market_and_death(doc, ctx, mode == "rational", name)
    except ScenarioError as exc:
        ctx.fail(("market",), str(exc))
    claim = _claim(doc.get("claim"), scenario, ctx)
    sec = doc.get("securitization") or {}
    if not isinstance(sec, dict):
        ctx.fail(("securitization",), "must be a mapping")
    instruments = sec.get("instruments", [])
    if isinstance(instruments, str):
        instruments = [s.strip() for s in instruments.split(",") if s.strip()]
    for i, inst in enumerate(instruments):
        if inst not in ("endowment", "bond"):
            ctx.fail(("securitization", "instruments", str(i)), f"unknown instrument {inst!r}")
    output = doc.get("output") or {}
    if not isinstance(output, dict):
        ctx.fail(("output",), "must be a mapping")
    fmt = output.get("format", "csv")
    if fmt not in ("csv", "json"):
        ctx.fail(("output", "format"), f"format must be csv or json, got {fmt!r}")
    return ScenarioSpec(scenario, claim, list(instruments), dict(output), mode, doc)


def _get(d: dict, key: str, path: tuple, ctx: _Ctx, default=...):
    if key not in d:
        if default is ...:
            ctx.fail(path + (key,), "required field missing")
        return default
    return d[key]


def _num(d, key, path, ctx, default=...):
    v = _get(d, key, path, ctx, default)
    try:
        return parse_number(v, ".".join(path + (key,)))
    except ScenarioFileError as exc:
        ctx.fail(path + (key,), str(exc).split(": ", 1)[-1])


def _int(d, key, path, ctx, default=...):
    v = _get(d, key, path, ctx, default)
    if isinstance(v, bool) or not isinstance(v, int):
        ctx.fail(path + (key,), f"expected an integer, got {v!r}")
    return v


def _split_path(key) -> tuple:
    if isinstance(key, (list, tuple)):
        return tuple(str(x) for x in key)
    key = str(key)
    if key in ("", "root"):
        return ()
    return tuple(key.split("/"))


def _market_and_death(doc, ctx, exact_mode, name):
    m = doc["market"]
    fam = m.get("family")
    if fam not in MARKET_FAMILIES:
        ctx.fail(("market", "family"), f"unknown market family {fam!r}; choose from {MARKET_FAMILIES}")
    if fam == "random":
        from .oracle import FAMILIES, random_scenario

        d = doc["death"]
        kind = d.get("family")
        if kind != "random":
            ctx.fail(("death", "family"), "a random market needs death family 'random'")
        dfam = d.get("kind", "independent")
        if dfam not in FAMILIES:
            ctx.fail(("death", "kind"), f"unknown random family {dfam!r}")
        seed = _int(m, "seed", ("market",), ctx)
        sc = random_scenario(seed, dfam, steps=m.get("horizon"), exact_mode=exact_mode)
        sc.name = name or sc.name
        return sc.market, sc.death, sc
    path = ("market",)
    normalize = bool(m.get("normalize", True))
    if fam == "binomial":
        market = binomial(_int(m, "horizon", path, ctx), _num(m, "up", path, ctx, 1),
                          _num(m, "down", path, ctx, 1), _num(m, "p", path, ctx, "1/2"),
                          _num(m, "s0", path, ctx, 1), normalize=normalize)
    elif fam == "two_driver":
        def triple(key, default):
            v = m.get(key, default)
            if not isinstance(v, (list, tuple)) or len(v) != 3:
                ctx.fail(path + (key,), "expected [up, down, p]")
            return tuple(parse_number(x, f"market.{key}") for x in v)

        market = two_driver(_int(m, "horizon", path, ctx), triple("s", [1, 1, "1/2"]),
                            triple("y", [1, 1, "1/2"]), _num(m, "s0", path, ctx, 1),
                            _num(m, "y0", path, ctx, 0), normalize=normalize)
    elif fam == "product":
        drivers = _get(m, "drivers", path, ctx)
        if not isinstance(drivers, dict) or not drivers:
            ctx.fail(path + ("drivers",), "expected a mapping of driver specs")
        spec = {}
        for dname, dv in drivers.items():
            dpath = path + ("drivers", str(dname))
            moves = _get(dv, "moves", dpath, ctx)
            spec[str(dname)] = (_num(dv, "start", dpath, ctx, 0),
                                [(str(mv[0]), parse_number(mv[1]), parse_number(mv[2])) for mv in moves])
        market = product_market(_int(m, "horizon", path, ctx), spec, normalize=normalize,
                                primary=m.get("primary"))
    else:
        market = _explicit_market(m, ctx)
    death = _death(doc["death"], market, ctx)
    try:
        scenario = build_space(market, death, exact_mode=exact_mode, name=name)
    except ScenarioError as exc:
        ctx.fail(("death",), str(exc))
    return market, death, scenario


def _explicit_market(m, ctx) -> Market:
    path = ("market",)
    horizon = _int(m, "horizon", path, ctx)
    root = _get(m, "root", path, ctx)
    if not isinstance(root, dict):
        ctx.fail(path + ("root",), "expected asset values at the root")
    nodes = _get(m, "nodes", path, ctx)
    if not isinstance(nodes, list):
        ctx.fail(path + ("nodes",), "expected a list of nodes")
    children = {}
    for i, node in enumerate(nodes):
        npath = path + ("nodes", str(i))
        key = _split_path(_get(node, "node", npath, ctx))
        if key in children:
            ctx.fail(npath + ("node",), f"node {'/'.join(key) or 'root'!r} listed twice")
        branches = []
        for j, br in enumerate(_get(node, "branches", npath, ctx)):
            bpath = npath + ("branches", str(j))
            values = _get(br, "values", bpath, ctx)
            branches.append(Branch(str(_get(br, "label", bpath, ctx)), _num(br, "prob", bpath, ctx),
                                   {k: parse_number(v, ".".join(bpath + ("values", k)))
                                    for k, v in values.items()}))
        children[key] = branches
    try:
        return explicit_tree(horizon, {k: parse_number(v) for k, v in root.items()}, children,
                             m.get("primary", "S"))
    except ScenarioError as exc:
        ctx.fail(path, str(exc))


def _expr(text, path, ctx) -> Expression:
    try:
        return Expression(text)
    except ValueError as exc:
        ctx.fail(path, str(exc))


def _death(d, market: Market, ctx):
    path = ("death",)
    fam = d.get("family")
    if fam not in DEATH_FAMILIES or fam == "random":
        ctx.fail(path + ("family",), f"unknown death family {fam!r}; choose from {DEATH_FAMILIES[:-1]}")
    N = market.horizon
    if fam == "independent":
        probs = _get(d, "probs", path, ctx)
        if not isinstance(probs, list) or len(probs) != N:
            ctx.fail(path + ("probs",), f"expected {N} probabilities P(tau = 1..{N})")
        beyond = d.get("beyond")
        return IndependentDeath([parse_number(p, "death.probs") for p in probs],
                                None if beyond is None else parse_number(beyond, "death.beyond"))
    if fam == "explicit":
        matrix = _get(d, "matrix", path, ctx)
        if not isinstance(matrix, dict):
            ctx.fail(path + ("matrix",), "expected rows keyed by path ('u/d')")
        rows = {}
        for key, row in matrix.items():
            rows["".join(_split_path(key))] = [parse_number(v, f"death.matrix.{key}") for v in row]
        return ExplicitDeath(rows)
    if fam == "stopping":
        rule = _expr(_get(d, "rule", path, ctx), path + ("rule",), ctx)
        return _checked_rule(StoppingRule(lambda v, t: bool(rule(path_env(v, t)))), market, ctx,
                             path + ("rule",))
    hazard = _expr(_get(d, "hazard", path, ctx), path + ("hazard",), ctx)
    return _checked_rule(HazardDeath(lambda v, t: hazard(path_env(v, t))), market, ctx,
                         path + ("hazard",))


def _checked_rule(law, market, ctx, path):
    try:
        law.law(market)
    except (NameError, TypeError, ZeroDivisionError, ScenarioError) as exc:
        ctx.fail(path, str(exc))
    return law


def _values_spec(spec, scenario: Scenario, T: int, path, ctx, adapted: bool):
    """Expression or explicit per-path values -> outcome array."""
    m = scenario.market
    if isinstance(spec, dict):
        per = spec.get("paths")
        if not isinstance(per, dict):
            ctx.fail(path, "expected an expression or {paths: {...}}")
        table = {}
        for key, v in per.items():
            table["".join(_split_path(key))] = v
        rows = []
        for k, p in enumerate(m.paths):
            key = "".join(p)
            if key not in table:
                ctx.fail(path + ("paths",), f"missing values for path {'/'.join(p)!r}")
            v = table[key]
            if adapted:
                if not isinstance(v, list) or len(v) != m.horizon + 1:
                    ctx.fail(path + ("paths", "/".join(p)), f"expected {m.horizon + 1} values")
                rows.append([parse_number(x) for x in v])
            else:
                rows.append(parse_number(v))
        if adapted:
            arr = [[rows[k][t] for k in scenario.path_of] for t in range(m.horizon + 1)]
        else:
            arr = [rows[k] for k in scenario.path_of]
        return scenario.space.array(arr)
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        spec = str(spec)
    if not isinstance(spec, str):
        ctx.fail(path, f"expected an expression string, got {spec!r}")
    expr = _expr(spec, path, ctx)
    try:
        if adapted:
            return scenario.adapted_function(lambda v, t: expr(path_env(v, t, T)))
        return scenario.path_function(lambda v: expr(path_env(v, T, T)))
    except (NameError, TypeError, ZeroDivisionError) as exc:
        ctx.fail(path, str(exc))


def _claim(c, scenario: Scenario, ctx):
    if c is None:
        return None
    path = ("claim",)
    if not isinstance(c, dict):
        ctx.fail(path, "must be a mapping")
    T = _int(c, "term", path, ctx)
    if not 1 <= T <= scenario.horizon:
        ctx.fail(path + ("term",), f"term {T} outside 1..{scenario.horizon}")
    known = {"term", "survival", "death", "annuity", "name"}
    if set(c) - known:
        ctx.fail(path + (sorted(set(c) - known)[0],), "unknown claim field")
    if "annuity" in c:
        if "survival" in c or "death" in c:
            ctx.fail(path + ("annuity",), "an annuity carries no separate survival/death benefit")
        C = _values_spec(c["annuity"], scenario, T, path + ("annuity",), ctx, adapted=True)
        claim = Claim.annuity_claim(C, T)
    else:
        g = _values_spec(c["survival"], scenario, T, path + ("survival",), ctx, False) \
            if "survival" in c else None
        K = _values_spec(c["death"], scenario, T, path + ("death",), ctx, True) \
            if "death" in c else None
        if g is None and K is None:
            ctx.fail(path, "claim needs survival, death or annuity")
        claim = Claim(T, survival=g, death=K)
        claim.name = claim.kind
    if "name" in c:
        claim.name = str(c["name"])
    try:
        claim.legs(scenario.bundle)
    except ValueError as exc:
        ctx.fail(path, str(exc))
    return claim


# -- explicit-tree export ----------------------------------------------

def explicit_document(spec: ScenarioSpec) -> dict:
    """Self-contained explicit form: tree, death matrix, per-path claim values.

    Nodes are listed breadth first, lexicographically by branch label.
    """
    sc = spec.scenario
    m = sc.market
    kids = m.children()
    order = sorted(kids, key=lambda node: (len(node), node))
    nodes = []
    for node in order:
        nodes.append({
            "node": "/".join(node) or "root",
            "branches": [{"label": b.label, "prob": format_exact(b.prob),
                          "values": {k: format_exact(v) for k, v in b.values.items()}}
                         for b in kids[node]],
        })
    market = {"family": "explicit", "horizon": m.horizon, "primary": m.primary,
              "root": {k: format_exact(v) for k, v in m.root_values().items()}, "nodes": nodes}
    death = {"family": "explicit",
             "matrix": {"/".join(p): [format_exact(q) for q in row] for p, row in zip(m.paths, sc.law)}}
    doc = {"version": SCHEMA_VERSION, "mode": spec.mode, "name": sc.name,
           "market": market, "death": death}
    if spec.claim is not None:
        doc["claim"] = _explicit_claim(spec.claim, sc)
    if spec.instruments:
        doc["securitization"] = {"instruments": list(spec.instruments)}
    if spec.output:
        doc["output"] = dict(spec.output)
    return doc


def _first_outcome_per_path(sc: Scenario) -> dict:
    out = {}
    for i, k in enumerate(sc.path_of):
        out.setdefault(int(k), i)
    return out


def _explicit_claim(claim: Claim, sc: Scenario) -> dict:
    first = _first_outcome_per_path(sc)
    m = sc.market
    names = {k: "/".join(p) for k, p in enumerate(m.paths)}
    out: dict = {"term": claim.term, "name": claim.name}
    bundle = sc.bundle

    def adapted_table(values):
        return {"paths": {names[k]: [format_exact(values[t, i]) for t in range(m.horizon + 1)]
                          for k, i in first.items()}}

    if claim.annuity is not None:
        K, _ = claim.legs(bundle)
        out["annuity"] = adapted_table(K)
        return out
    K, g = claim.legs(bundle)
    if claim.survival is not None:
        out["survival"] = {"paths": {names[k]: format_exact(g[i]) for k, i in first.items()}}
    if claim.death is not None:
        out["death"] = adapted_table(K)
    return out


def dump_yaml(doc: dict) -> str:
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None, width=100)


# -- report emission ---------------------------------------------------

def process_rows(name: str, values: np.ndarray, scenario: Scenario, filtration) -> list[tuple]:
    """One row per (t, atom) of ``filtration``; value taken at the atom's first outcome."""
    rows = []
    for t in range(values.shape[0]):
        part = filtration[t]
        for a, atom in enumerate(part.atoms):
            rows.append((name, t, format_atom_key(part.keys[a]), values[t, atom[0]]))
    return rows


def rows_to_csv(rows: list[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["process", "t", "atom", "value", "exact"])
    for name, t, atom, v in rows:
        w.writerow([name, t, atom, format_decimal(v), int(is_exact_scalar(v))])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if is_exact_scalar(x):
        return format_exact(x)
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    return x


def rows_to_json(rows: list[tuple], extra: dict | None = None) -> str:
    table = [{"process": n, "t": t, "atom": a, "value": _jsonable(v), "exact": is_exact_scalar(v)}
             for n, t, a, v in rows]
    doc = {"rows": table}
    if extra:
        doc.update(_jsonable(extra))
    return json.dumps(doc, indent=1)
