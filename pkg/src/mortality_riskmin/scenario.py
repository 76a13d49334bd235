"""Market trees, death laws and the product space they generate."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Callable, Mapping, Sequence

import numpy as np

from .space import ADAPTED, FilteredSpace, Partition, Process, exact

if TYPE_CHECKING:
    from .enlargement import RandomTime


class ScenarioError(ValueError):
    """A market or death-law description is not a valid probability model."""


@dataclass(frozen=True)
class Branch:
    label: str
    prob: object
    values: Mapping[str, object]


@dataclass
class Market:
    """Finite market tree stored path by path.

    ``values[name]`` has shape ``(horizon + 1, n_paths)`` and holds exact
    rationals. Paths are sorted lexicographically by their branch labels.
    """

    horizon: int
    paths: tuple
    weights: tuple
    values: dict
    primary: str = "S"
    branch_probs: dict = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    @property
    def asset_names(self) -> list[str]:
        return list(self.values)

    def node_label(self, path: int, t: int) -> str:
        return "".join(self.paths[path][:t]) if t else ""

    def children(self) -> dict:
        """Successor listing per node (label prefix), for explicit-tree export."""
        out: dict = {}
        for k, path in enumerate(self.paths):
            for t in range(self.horizon):
                node = tuple(path[:t])
                label = path[t]
                kids = out.setdefault(node, {})
                if label not in kids:
                    vals = {name: v[t + 1, k] for name, v in self.values.items()}
                    kids[label] = Branch(label, self.branch_probs[node + (label,)], vals)
        return {node: [kids[l] for l in sorted(kids)] for node, kids in out.items()}

    def root_values(self) -> dict:
        return {name: v[0, 0] for name, v in self.values.items()}


def explicit_tree(horizon: int, root: Mapping[str, object],
                  children: Mapping[tuple, Sequence[Branch]], primary: str = "S") -> Market:
    """Market from successor listings keyed by the tuple of branch labels."""
    horizon = int(horizon)
    if horizon < 1:
        raise ScenarioError("horizon must be at least 1")
    names = list(root)
    if primary not in names:
        raise ScenarioError(f"primary asset {primary!r} missing from root values")
    paths, weights, cols, probs = [], [], [], {}

    def walk(node: tuple, weight, values: list[dict]):
        if len(node) == horizon:
            paths.append(node)
            weights.append(weight)
            cols.append(values)
            return
        kids = children.get(node)
        if not kids:
            raise ScenarioError(f"node {''.join(node) or 'root'!r} has no successors")
        total = sum(exact(b.prob) for b in kids)
        if total != 1:
            raise ScenarioError(
                f"successor probabilities at node {''.join(node) or 'root'!r} sum to {total}")
        labels = [b.label for b in kids]
        if len(set(labels)) != len(labels):
            raise ScenarioError(f"duplicate branch labels at node {''.join(node) or 'root'!r}")
        for b in sorted(kids, key=lambda b: b.label):
            p = exact(b.prob)
            if p < 0 or p > 1:
                raise ScenarioError(f"branch probability {p} outside [0, 1]")
            if p == 0:
                raise ScenarioError(
                    f"zero-probability outcome requested at {''.join(node + (b.label,))!r}")
            missing = set(names) - set(b.values)
            if missing:
                raise ScenarioError(f"branch {''.join(node + (b.label,))!r} lacks {sorted(missing)}")
            probs[node + (b.label,)] = p
            walk(node + (b.label,), weight * p,
                 values + [{n: exact(b.values[n]) for n in names}])

    walk((), exact(1), [{n: exact(root[n]) for n in names}])
    values = {}
    for name in names:
        arr = np.empty((horizon + 1, len(paths)), dtype=object)
        for k, col in enumerate(cols):
            for t in range(horizon + 1):
                arr[t, k] = col[t][name]
        values[name] = arr
    return Market(horizon, tuple(paths), tuple(weights), values, primary, probs)


def product_market(horizon: int, drivers: Mapping[str, tuple], normalize: bool = True,
                   primary: str | None = None) -> Market:
    """Independent additive drivers, identical in law at every step.

    ``drivers[name] = (start, [(label, prob, increment), ...])``. With
    ``normalize`` each driver's mean increment is subtracted so that every
    asset is a martingale.
    """
    specs = {}
    for name, (start, moves) in drivers.items():
        moves = [(str(l), exact(p), exact(inc)) for l, p, inc in moves]
        if sum(p for _, p, _ in moves) != 1:
            raise ScenarioError(f"driver {name!r} probabilities do not sum to 1")
        if normalize:
            drift = sum(p * inc for _, p, inc in moves)
            moves = [(l, p, inc - drift) for l, p, inc in moves]
        specs[name] = (exact(start), moves)
    names = list(specs)
    primary = primary or names[0]

    combos = [("", exact(1), {})]
    for name in names:
        combos = [(lab + l, p * q, {**inc, name: d})
                  for lab, p, inc in combos for l, q, d in specs[name][1]]

    children: dict = {}

    def grow(node: tuple, level: dict):
        if len(node) == horizon:
            return
        kids = []
        for lab, p, inc in combos:
            nxt = {n: level[n] + inc[n] for n in names}
            kids.append(Branch(lab, p, nxt))
            grow(node + (lab,), nxt)
        children[node] = kids

    root = {n: specs[n][0] for n in names}
    grow((), root)
    return explicit_tree(horizon, root, children, primary)


def binomial(horizon: int, up=1, down=1, p="1/2", s0=1, normalize: bool = True) -> Market:
    """Additive binomial tree: S moves by +up with probability p, else by -down."""
    p = exact(p)
    if p <= 0 or p >= 1:
        raise ScenarioError("binomial probability must lie strictly between 0 and 1")
    return product_market(horizon, {"S": (s0, [("u", p, up), ("d", 1 - p, -exact(down))])},
                          normalize=normalize)


def two_driver(horizon: int, s=(1, 1, "1/2"), y=(1, 1, "1/2"), s0=1, y0=0,
               normalize: bool = True) -> Market:
    """Product of an asset tree S (labels u/d) and an auxiliary coin Y (h/l)."""
    su, sd, sp = s
    yu, yd, yp = y
    sp, yp = exact(sp), exact(yp)
    return product_market(horizon, {
        "S": (s0, [("u", sp, su), ("d", 1 - sp, -exact(sd))]),
        "Y": (y0, [("h", yp, yu), ("l", 1 - yp, -exact(yd))]),
    }, normalize=normalize, primary="S")


class PathView:
    """Read-only access to one market path, used by death-law callbacks."""

    def __init__(self, market: Market, k: int):
        self.market = market
        self.k = k

    @property
    def labels(self) -> tuple:
        return self.market.paths[self.k]

    def value(self, name: str, t: int):
        return self.market.values[name][t, self.k]

    def __getitem__(self, key):
        name, t = key
        return self.value(name, t)

    def increment(self, name: str, t: int):
        if t < 1:
            return exact(0)
        return self.value(name, t) - self.value(name, t - 1)

    def prefix(self, t: int) -> tuple:
        return self.labels[:t]


class DeathLaw:
    """Conditional law of the death time given the full market path.

    ``law(market)`` returns one row per path: P(tau = 1), ..., P(tau = N),
    P(tau beyond N).
    """

    family = "abstract"

    def rows(self, market: Market) -> list[list]:
        raise NotImplementedError

    def law(self, market: Market) -> list[list]:
        rows = [[exact(v) for v in row] for row in self.rows(market)]
        if len(rows) != market.n_paths:
            raise ScenarioError(f"{len(rows)} death-law rows for {market.n_paths} paths")
        for k, row in enumerate(rows):
            if len(row) != market.horizon + 1:
                raise ScenarioError(
                    f"death-law row for path {''.join(market.paths[k])!r} has {len(row)} "
                    f"entries, expected {market.horizon + 1}")
            if any(v < 0 or v > 1 for v in row):
                raise ScenarioError(f"death probabilities outside [0, 1] on path {k}")
            if sum(row) != 1:
                raise ScenarioError(
                    f"death-law row for path {''.join(market.paths[k])!r} sums to {sum(row)}")
        return rows


class IndependentDeath(DeathLaw):
    """The same death distribution on every market path."""

    family = "independent"

    def __init__(self, probs: Sequence, beyond=None):
        self.probs = [exact(q) for q in probs]
        self.beyond = exact(1) - sum(self.probs) if beyond is None else exact(beyond)

    def rows(self, market):
        if len(self.probs) != market.horizon:
            raise ScenarioError(
                f"independent death table has {len(self.probs)} entries, horizon is {market.horizon}")
        return [self.probs + [self.beyond] for _ in market.paths]


class StoppingRule(DeathLaw):
    """tau = first t >= 1 at which ``rule(path, t)`` holds, beyond if none."""

    family = "f-stopping"

    def __init__(self, rule: Callable[[PathView, int], bool]):
        self.rule = rule

    def rows(self, market):
        out = []
        for k in range(market.n_paths):
            view = PathView(market, k)
            row = [exact(0)] * (market.horizon + 1)
            hit = next((t for t in range(1, market.horizon + 1) if self.rule(view, t)), None)
            row[(hit or market.horizon + 1) - 1] = exact(1)
            out.append(row)
        return out


class HazardDeath(DeathLaw):
    """Death at t with probability ``hazard(path, t)`` given survival to t-1.

    The hazard may look at the whole path, so correlated and non-immersed
    models are expressible. Hazards that only use the path up to t give an
    F-pseudo-stopping time.
    """

    family = "hazard-modulated"

    def __init__(self, hazard: Callable[[PathView, int], object]):
        self.hazard = hazard

    def rows(self, market):
        out = []
        for k in range(market.n_paths):
            view = PathView(market, k)
            alive = exact(1)
            row = []
            for t in range(1, market.horizon + 1):
                h = exact(self.hazard(view, t))
                if h < 0 or h > 1:
                    raise ScenarioError(f"hazard {h} outside [0, 1] at t={t}")
                row.append(alive * h)
                alive = alive * (1 - h)
            row.append(alive)
            out.append(row)
        return out


class ExplicitDeath(DeathLaw):
    """Row-stochastic law of tau per terminal market path."""

    family = "explicit"

    def __init__(self, matrix):
        self.matrix = matrix

    def rows(self, market):
        if isinstance(self.matrix, Mapping):
            out = []
            for path in market.paths:
                key = "".join(path)
                if key in self.matrix:
                    out.append(list(self.matrix[key]))
                elif path in self.matrix:
                    out.append(list(self.matrix[path]))
                else:
                    raise ScenarioError(f"no death-law row for path {key!r}")
            return out
        return [list(r) for r in self.matrix]


@dataclass
class Scenario:
    """A market, a death law, and the product space they generate."""

    market: Market
    death: DeathLaw
    space: FilteredSpace
    tau: "RandomTime"
    path_of: np.ndarray
    law: list = field(default_factory=list)
    name: str = ""

    @property
    def horizon(self) -> int:
        return self.space.horizon

    def market_values(self, name: str) -> np.ndarray:
        """Asset ``name`` as an array of shape (horizon + 1, n_outcomes)."""
        return self.space.array(self.market.values[name][:, self.path_of])

    def asset(self, name: str | None = None) -> Process:
        name = name or self.market.primary
        cache = self.__dict__.setdefault("_assets", {})
        if name not in cache:
            cache[name] = Process(self.market_values(name), self.space.F, ADAPTED, check=False, name=name)
        return cache[name]

    @property
    def S(self) -> Process:
        return self.asset()

    @cached_property
    def bundle(self):
        from .enlargement import azema_bundle

        return azema_bundle(self.space, self.tau)

    def path_function(self, fn: Callable[[PathView], object]) -> np.ndarray:
        """Evaluate a function of the market path on every outcome."""
        per_path = [fn(PathView(self.market, k)) for k in range(self.market.n_paths)]
        return self.space.array([per_path[k] for k in self.path_of])

    def adapted_function(self, fn: Callable[[PathView, int], object]) -> np.ndarray:
        """Evaluate ``fn(path, t)`` for every t; caller guarantees adaptedness."""
        rows = []
        for t in range(self.horizon + 1):
            per_path = [fn(PathView(self.market, k), t) for k in range(self.market.n_paths)]
            rows.append([per_path[k] for k in self.path_of])
        return self.space.array(rows)

    def atom_id(self, t: int, outcome: int, filtration=None) -> str:
        """Stable identifier of the atom containing ``outcome`` at time t."""
        filt = filtration or self.space.F
        key = filt[t].keys[filt[t].atom_of(outcome)]
        return format_atom_key(key)


def format_atom_key(key) -> str:
    if isinstance(key, tuple) and len(key) == 2 and isinstance(key[1], str):
        return f"{''.join(key[0]) or 'root'}|{key[1]}"
    if isinstance(key, tuple):
        return "".join(key) or "root"
    return str(key)


def build_space(market: Market, death: DeathLaw, exact_mode: bool = True,
                name: str = "") -> Scenario:
    """Product space of market paths and death states.

    Outcomes are ``(path_labels, state)`` with state in 1..N or N+1 for
    "beyond the horizon"; zero-probability death states are omitted.
    """
    from .enlargement import RandomTime

    law = death.law(market)
    N = market.horizon
    outcomes, weights, taus, path_of = [], [], [], []
    for k, (path, w) in enumerate(zip(market.paths, market.weights)):
        if w <= 0:
            raise ScenarioError(f"zero-probability outcome requested on path {''.join(path)!r}")
        for state, q in enumerate(law[k], start=1):
            if q == 0:
                continue
            outcomes.append((path, state))
            weights.append(w * q)
            taus.append(state)
            path_of.append(k)
    path_of = np.array(path_of, dtype=np.int64)
    parts = [Partition.from_keys([market.paths[k][:t] for k in path_of]) for t in range(N + 1)]
    if not exact_mode:
        weights = [float(w) for w in weights]
        total = sum(weights)
        weights = [w / total for w in weights]
    space = FilteredSpace(N, outcomes, weights, parts, exact_mode=exact_mode)
    tau = RandomTime(np.array(taus, dtype=np.int64), N)
    return Scenario(market, death, space, tau, path_of, law, name)
