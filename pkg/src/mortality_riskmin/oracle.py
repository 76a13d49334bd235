"""Brute-force quadratic hedging by global least squares, and a seeded
generator of small random scenarios for property checks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calculus import is_martingale
from .linalg import solve_min_norm
from .scenario import (
    Branch,
    DeathLaw,
    ExplicitDeath,
    HazardDeath,
    IndependentDeath,
    Market,
    Scenario,
    StoppingRule,
    build_space,
    explicit_tree,
)
from .space import PREDICTABLE, Filtration, Process, delta, exact

DEFAULT_MAX_UNKNOWNS = 5000
FAMILIES = ("pseudo-stopping", "independent", "f-stopping", "hazard-modulated", "unconstrained")


class OracleSizeError(ValueError):
    pass


@dataclass
class OracleSolution:
    initial_capital: object
    strategy: list
    risk: object
    unknowns: int
    rank: int
    normal_residual: float
    columns: list = field(default_factory=list)


def brute_force_hedge(payoff, assets, filtration: Filtration,
                      max_unknowns: int = DEFAULT_MAX_UNKNOWNS, check: bool = True) -> OracleSolution:
    """Minimize E[(payoff - c - sum_i xi_i . X_i at N)^2] over constants and
    predictable strategies by solving the global normal equations.

    One unknown per (asset, step, atom at the previous step) plus the constant.
    """
    space = filtration.space
    assets = list(assets) if isinstance(assets, (list, tuple)) else [assets]
    N = space.horizon
    total = 1 + sum(len(filtration[s - 1]) for s in range(1, N + 1)) * len(assets)
    if total > max_unknowns:
        raise OracleSizeError(f"{total} unknowns exceed the cap of {max_unknowns}")
    if check:
        for k, a in enumerate(assets):
            diag = is_martingale(a, filtration)
            if not diag.ok:
                raise ValueError(f"asset {k} is not a martingale: {diag.detail}")
    y = space.array(payoff) if not isinstance(payoff, np.ndarray) else payoff
    cols, keys = [space.ones(space.n)], [None]
    for i, a in enumerate(assets):
        dX = delta(a.values if isinstance(a, Process) else np.asarray(a))
        for s in range(1, N + 1):
            for k, atom in enumerate(filtration[s - 1].atoms):
                col = space.zeros(space.n)
                col[atom] = dX[s][atom]
                if space.is_zero(col) if not space.exact else all(v == 0 for v in col[atom]):
                    continue
                cols.append(col)
                keys.append((i, s, k))
    X = np.stack(cols, axis=1)
    Xw = X * space.weights[:, None]
    gram = Xw.T @ X
    rhs = Xw.T @ y
    beta = solve_min_norm(gram.tolist(), rhs.tolist(), exact=space.exact)
    beta = np.array(beta, dtype=object if space.exact else float)
    fitted = X @ beta
    resid = y - fitted
    risk = (space.weights * resid * resid).sum()
    normal = Xw.T @ resid
    normal_residual = float(max(abs(v) for v in normal)) if len(normal) else 0.0
    strategy = [space.zeros((N + 1, space.n)) for _ in assets]
    for b, key in zip(beta[1:], keys[1:]):
        i, s, k = key
        strategy[i][s][filtration[s - 1].atoms[k]] = b
    rank = _rank(gram, space.exact)
    return OracleSolution(beta[0], [Process(st, filtration, PREDICTABLE, check=False)
                                    for st in strategy], risk, len(cols), rank,
                          normal_residual, keys)


def _rank(gram: np.ndarray, exact_mode: bool) -> int:
    if not exact_mode:
        return int(np.linalg.matrix_rank(np.asarray(gram, dtype=float)))
    from .linalg import rref

    _, piv = rref(gram.tolist())
    return len(piv)


# -- random scenarios ------------------------------------------------------

MAX_PATHS = 24
HAZARDS = ("0", "1/4", "1/3", "1/2", "2/3", "3/4")


def _rand_probs(rng, k: int) -> list:
    w = [int(v) for v in rng.integers(1, 5, size=k)]
    tot = sum(w)
    return [exact(v) / tot for v in w]


def _random_tree(rng, horizon: int, max_branching: int) -> Market:
    children = {}
    frontier = [()]
    values = {(): {"S": exact(int(rng.integers(1, 6)))}}
    paths_now = 1
    for t in range(horizon):
        nxt = []
        for node in frontier:
            cap = max(2, min(max_branching, MAX_PATHS // max(paths_now, 1)))
            b = int(rng.integers(2, max(cap, 2) + 1))
            probs = _rand_probs(rng, b)
            incs = [exact(int(v)) for v in rng.integers(-3, 4, size=b)]
            mean = sum(p * d for p, d in zip(probs, incs))
            kids = []
            for j in range(b):
                label = chr(ord("a") + j)
                val = values[node]["S"] + incs[j] - mean
                values[node + (label,)] = {"S": val}
                kids.append(Branch(label, probs[j], {"S": val}))
                nxt.append(node + (label,))
            children[node] = kids
        paths_now = len(nxt)
        frontier = nxt
    return explicit_tree(horizon, values[()], children)


def _modulated_tree(rng, horizon: int, layout: str) -> Market:
    children = {}
    frontier = [()]
    root = {"S": exact(int(rng.integers(2, 6))), "Y": exact(0)}
    values = {(): root}
    for t in range(horizon):
        nxt = []
        for node in frontier:
            a = exact(int(rng.integers(1, 4)))
            cur = values[node]
            kids = []
            if layout == "coin":
                q = exact(int(rng.integers(1, 4))) / 4
                for sl, ds in (("u", a), ("d", -a)):
                    for yl, py, dy in (("h", q, 1 - q), ("l", 1 - q, -q)):
                        val = {"S": cur["S"] + ds, "Y": cur["Y"] + dy}
                        kids.append(Branch(sl + yl, exact("1/2") * py, val))
            else:
                p = exact(int(rng.integers(1, 4))) / 8
                for sl, ps, ds in (("u", p, a), ("d", p, -a), ("f", 1 - 2 * p, exact(0))):
                    val = {"S": cur["S"] + ds, "Y": cur["Y"]}
                    kids.append(Branch(sl, ps, val))
            for br in kids:
                values[node + (br.label,)] = dict(br.values)
                nxt.append(node + (br.label,))
            children[node] = kids
        frontier = nxt
    return explicit_tree(horizon, root, children)


def _death_support(rng, horizon: int, death_states: int) -> list[int]:
    states = list(range(1, horizon + 2))
    k = int(rng.integers(1, min(death_states, len(states)) + 1))
    chosen = sorted(int(v) for v in rng.choice(states, size=k, replace=False))
    return chosen


class _TableHazard:
    """Lazily filled random hazard table keyed by path features."""

    def __init__(self, rng, support, horizon, feature, allow_one):
        self.rng = rng
        self.support = support
        self.horizon = horizon
        self.feature = feature
        self.allow_one = allow_one
        self.table = {}

    def __call__(self, view, t):
        if t not in self.support:
            return 0
        if t == max(self.support) and self.horizon + 1 not in self.support:
            return 1
        key = (view.prefix(t), self.feature(view, t))
        if key not in self.table:
            choices = list(HAZARDS) + (["1"] if self.allow_one(view, t) else [])
            self.table[key] = choices[int(self.rng.integers(0, len(choices)))]
        return self.table[key]


def random_death(rng, market: Market, family: str, death_states: int = 3) -> DeathLaw:
    N = market.horizon
    support = _death_support(rng, N, death_states)
    if family == "independent":
        probs = _rand_probs(rng, len(support))
        row = [exact(0)] * (N + 1)
        for s, p in zip(support, probs):
            row[s - 1] = p
        return IndependentDeath(row[:N], row[N])
    if family == "f-stopping":
        stop_nodes = {}

        def rule(view, t):
            if t not in support:
                return False
            if t == max(support) and N + 1 not in support:
                return True
            key = view.prefix(t)
            if key not in stop_nodes:
                stop_nodes[key] = bool(rng.integers(0, 3) == 0)
            return stop_nodes[key]

        law = StoppingRule(rule)
        law.rows(market)
        return ExplicitDeath(law.rows(market))
    if family == "pseudo-stopping":
        haz = _TableHazard(rng, support, N, lambda v, t: None, lambda v, t: True)
        return ExplicitDeath(HazardDeath(haz).rows(market))
    if family == "hazard-modulated":
        def feature(view, t):
            if t >= N:
                return None
            nxt = view.labels[t]
            return nxt[-1] if len(nxt) == 2 else (nxt == "f")

        def allow_one(view, t):
            return t >= N or view.labels[t] == "f"

        haz = _TableHazard(rng, support, N, feature, allow_one)
        return ExplicitDeath(HazardDeath(haz).rows(market))
    if family == "unconstrained":
        rows = []
        for _ in market.paths:
            probs = _rand_probs(rng, len(support))
            row = [exact(0)] * (N + 1)
            for s, p in zip(support, probs):
                row[s - 1] = p
            rows.append(row)
        return ExplicitDeath(rows)
    raise ValueError(f"unknown scenario family {family!r}")


def random_scenario(seed: int, family: str = "independent", steps: int | None = None,
                    branching: int = 4, death_states: int = 3, exact_mode: bool = True) -> Scenario:
    """Reproducible small scenario (steps <= 3, branching <= 4, death states <= 3)."""
    if family not in FAMILIES:
        raise ValueError(f"unknown scenario family {family!r}; choose from {FAMILIES}")
    if steps is not None and not 1 <= steps <= 3:
        raise ValueError("steps must lie in 1..3")
    if not 2 <= branching <= 4:
        raise ValueError("branching must lie in 2..4")
    if not 1 <= death_states <= 3:
        raise ValueError("death states must lie in 1..3")
    rng = np.random.default_rng(seed)
    horizon = steps or int(rng.integers(1, 4))
    if family == "hazard-modulated":
        layout = "coin" if (rng.integers(0, 2) == 0 and branching >= 4) else "magnitude"
        if branching < 3:
            raise ValueError("the hazard-modulated family needs branching >= 3")
        if horizon == 3 and layout == "coin":
            horizon = 2
        market = _modulated_tree(rng, horizon, layout)
    else:
        market = _random_tree(rng, horizon, branching)
    death = random_death(rng, market, family, death_states)
    return build_space(market, death, exact_mode=exact_mode, name=f"{family}-{seed}")


def random_benefits(scenario: Scenario, seed: int) -> dict:
    """Random survival benefit g, death benefit K and nondecreasing accumulator C."""
    rng = np.random.default_rng(seed + 7919)
    space = scenario.space
    N = scenario.horizon
    T = int(rng.integers(1, N + 1))
    by_node: dict = {}

    def node_value(view, t, tag, lo, hi):
        key = (tag, view.prefix(t))
        if key not in by_node:
            by_node[key] = int(rng.integers(lo, hi + 1))
        return by_node[key]

    g = scenario.path_function(lambda v: node_value(v, T, "g", -2, 4))
    K = scenario.adapted_function(lambda v, t: node_value(v, t, "K", 0, 4) if t >= 1 else 0)
    inc = scenario.adapted_function(lambda v, t: node_value(v, t, "c", 0, 3) if t >= 1 else 0)
    C = inc.copy()
    for t in range(1, N + 1):
        C[t] = C[t - 1] + inc[t]
    return {"term": T, "g": g, "K": K, "C": space.array(C)}
