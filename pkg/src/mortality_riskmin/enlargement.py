"""Death time, progressive enlargement of the market filtration and the
objects it induces: Azema supermartingales, m, N^G, R, R-tilde and the
hat transform that turns stopped F-martingales into G-martingales.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calculus import bracket, dual_projection, is_martingale
from .space import (
    ADAPTED,
    PREDICTABLE,
    RAW,
    Diagnostic,
    FilteredSpace,
    Filtration,
    InvariantError,
    Partition,
    Process,
    cumulate,
    delta,
    lag,
    safe_divide,
)


class RandomTime:
    """Death time as an outcome-indexed integer array with values in 1..N+1.

    The value N+1 stands for "beyond the horizon".
    """

    def __init__(self, values, horizon: int):
        values = np.asarray(values, dtype=np.int64)
        if values.ndim != 1:
            raise ValueError("random time must be one-dimensional")
        if values.size and (values.min() < 1 or values.max() > horizon + 1):
            raise ValueError(f"random time values must lie in 1..{horizon + 1}")
        self.values = values
        self.horizon = int(horizon)

    @property
    def beyond(self) -> int:
        return self.horizon + 1

    def __len__(self) -> int:
        return len(self.values)

    def alive(self, t: int) -> np.ndarray:
        """Mask of {tau > t}."""
        return self.values > t

    def at(self, t: int) -> np.ndarray:
        return self.values == t

    def label(self, i: int) -> str:
        v = int(self.values[i])
        return "beyond" if v == self.beyond else str(v)


def stopped(values: np.ndarray, tau: RandomTime) -> np.ndarray:
    """X^tau: the value at min(t, tau)."""
    out = values.copy()
    for t in range(values.shape[0]):
        dead = tau.values < t
        if np.any(dead):
            out[t, dead] = values[tau.values[dead], dead]
    return out


def enlarge_filtration(space: FilteredSpace, tau: RandomTime) -> Filtration:
    """Progressive enlargement: F_t-atoms split by {tau > t} and {tau = s}, s <= t."""
    parts = []
    for t in range(space.horizon + 1):
        fpart = space.F[t]
        keys = []
        for i in range(space.n):
            state = "alive" if tau.values[i] > t else f"d{tau.values[i]}"
            keys.append((fpart.keys[fpart.labels[i]] if fpart.keys else fpart.labels[i], state))
        parts.append(Partition.from_keys(keys))
    return Filtration(space, parts, name="G")


@dataclass
class EnlargementBundle:
    space: FilteredSpace
    tau: RandomTime
    gfilt: Filtration
    G: Process
    Gtilde: Process
    D: Process
    DoF: Process
    m: Process
    NG: Process
    R: np.ndarray
    Rtilde: np.ndarray
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def F(self) -> Filtration:
        return self.space.F

    @property
    def horizon(self) -> int:
        return self.space.horizon

    @property
    def G_minus(self) -> np.ndarray:
        return lag(self.G.values)

    @property
    def m_hat(self) -> np.ndarray:
        if "m_hat" not in self.cache:
            self.cache["m_hat"] = hat_transform(self.m, self, check=False).values
        return self.cache["m_hat"]

    def at_risk(self, T: int | None = None) -> np.ndarray:
        """Mask of the stochastic interval ]0, tau] (optionally cut at T)."""
        N = self.horizon
        t = np.arange(N + 1)[:, None]
        mask = (t >= 1) & (t <= self.tau.values[None, :])
        if T is not None:
            mask &= t <= T
        return mask

    def before_R(self) -> np.ndarray:
        """Mask of [0, R[."""
        t = np.arange(self.horizon + 1)[:, None]
        return t < self.R[None, :]

    def on_G(self, values, tag: str = ADAPTED, check: bool = False, name: str = "") -> Process:
        return Process(values, self.gfilt, tag, check=check, name=name)

    def stop(self, X) -> Process:
        values = X.values if isinstance(X, Process) else np.asarray(X)
        return self.on_G(stopped(values, self.tau), name=getattr(X, "name", "") + "^tau")


def azema_bundle(space: FilteredSpace, tau: RandomTime, check: bool = True) -> EnlargementBundle:
    """All objects derived from (F, tau)."""
    N = space.horizon
    F = space.F
    gfilt = enlarge_filtration(space, tau)
    G = space.zeros((N + 1, space.n))
    Gt = space.zeros((N + 1, space.n))
    Dv = space.zeros((N + 1, space.n))
    for t in range(N + 1):
        G[t] = F.cond_exp(space.indicator(tau.alive(t)), t)
        Gt[t] = F.cond_exp(space.indicator(tau.values >= t), t)
        Dv[t] = space.indicator(tau.values <= t)
    D = Process(Dv, F, RAW, check=False, name="D")
    DoF = dual_projection(D, "optional", F)
    DoF.name = "DoF"
    m = Process(G + DoF.values, F, ADAPTED, check=False, name="m")

    at_risk = (np.arange(N + 1)[:, None] >= 1) & (np.arange(N + 1)[:, None] <= tau.values[None, :])
    comp = safe_divide(delta(DoF.values), Gt, at_risk, space)
    NG = Process(cumulate(delta(Dv) - comp), gfilt, ADAPTED, check=False, name="NG")

    R = np.full(space.n, N + 1, dtype=np.int64)
    for t in range(N, -1, -1):
        R[G[t] == 0] = t
    Rtilde = np.full(space.n, N + 1, dtype=np.int64)
    for i in range(space.n):
        r = R[i]
        if r <= N and Gt[r, i] == 0:
            Rtilde[i] = r

    bundle = EnlargementBundle(
        space, tau, gfilt,
        Process(G, F, ADAPTED, check=False, name="G"),
        Process(Gt, F, ADAPTED, check=False, name="Gtilde"),
        D, DoF, m, NG, R, Rtilde,
    )
    if check:
        problems = bundle_problems(bundle)
        if problems:
            raise InvariantError("enlargement bundle: " + "; ".join(problems))
    return bundle


def bundle_problems(bundle: EnlargementBundle) -> list[str]:
    space = bundle.space
    G, Gt, DoF = bundle.G.values, bundle.Gtilde.values, bundle.DoF.values
    problems = []
    tol = space.tolerance(G)
    if np.any(G < -tol) or np.any(G - Gt > tol) or np.any(Gt > 1 + tol):
        problems.append("0 <= G <= Gtilde <= 1 violated")
    if not space.close(G[0], space.ones(space.n)):
        problems.append("G_0 != 1")
    if not space.close(Gt[1:], G[1:] + delta(DoF)[1:]):
        problems.append("Gtilde != G + dDoF")
    if np.any(delta(DoF)[1:] < -tol):
        problems.append("DoF decreasing")
    if not is_martingale(bundle.m, bundle.F):
        problems.append("m is not an F-martingale")
    if not is_martingale(bundle.NG, bundle.gfilt):
        problems.append("N^G is not a G-martingale")
    return problems


def hat_transform(M, bundle: EnlargementBundle, check: bool = True) -> Process:
    """G-martingale correction of the stopped F-martingale M^tau.

    dM^_s = 1{s <= tau} (dM_s - dM_s dm_s / Gtilde_s + E[dM_s 1{Rtilde = s} | F_{s-1}]).
    """
    values = M.values if isinstance(M, Process) else np.asarray(M)
    space = bundle.space
    F = bundle.F
    if check:
        diag = is_martingale(Process(values, F, ADAPTED, check=False), F)
        if not diag.ok:
            raise ValueError(f"hat_transform needs an F-martingale: {diag.detail}")
    dM = delta(values)
    dm = delta(bundle.m.values)
    at_risk = bundle.at_risk()
    corr = safe_divide(dM * dm, bundle.Gtilde.values, at_risk, space)
    inc = space.zeros(values.shape)
    for s in range(1, values.shape[0]):
        jump = space.indicator(bundle.Rtilde == s)
        pre = F.cond_exp(dM[s] * jump, s - 1) if np.any(bundle.Rtilde == s) else space.zeros(space.n)
        inc[s] = space.indicator(at_risk[s]) * (dM[s] + pre) - corr[s]
    name = (M.name + "^") if isinstance(M, Process) and M.name else ""
    return bundle.on_G(cumulate(inc) + values[0], name=name)


@dataclass
class ModelReport:
    """Per-condition outcome of the standing assumption on (S, tau)."""

    martingale: Diagnostic
    orthogonality: Diagnostic
    jumps: Diagnostic

    @property
    def ok(self) -> bool:
        return bool(self.martingale and self.orthogonality and self.jumps)

    def __bool__(self) -> bool:
        return self.ok

    def items(self):
        return [("S is an F-martingale", self.martingale),
                ("<S, m> vanishes", self.orthogonality),
                ("no asset jump where Gtilde = 0 < G_-", self.jumps)]


def validate_model(S, bundle: EnlargementBundle) -> ModelReport:
    """Check the three structure conditions the hedging formulas rely on."""
    space = bundle.space
    F = bundle.F
    S = S if isinstance(S, Process) else Process(S, F, ADAPTED, check=False)
    mart = is_martingale(S, F)
    orth = is_martingale(bracket(S, bundle.m, F), F)
    dS = delta(S.values)
    G, Gt = bundle.G.values, bundle.Gtilde.values
    Gm = lag(G)
    tol = space.tolerance(S.values)
    worst, where = 0.0, None
    for s in range(1, space.horizon + 1):
        for i in range(space.n):
            if Gt[s, i] == 0 and Gm[s, i] > 0 and dS[s, i] != 0:
                mag = abs(float(dS[s, i]))
                if (space.exact or mag > tol) and (where is None or mag > worst):
                    worst, where = mag, (s, i)
    jumps = Diagnostic(where is None, worst, where,
                       "" if where is None else f"asset jump {worst:g} at (t, outcome)={where}")
    return ModelReport(mart, orth, jumps)


def is_pseudo_stopping(bundle: EnlargementBundle) -> bool:
    """True iff m is constant (equivalently tau is an F-pseudo-stopping time)."""
    m = bundle.m.values
    return bundle.space.close(m, bundle.space.zeros(m.shape) + m[0, 0])


def death_law_by_market(bundle: EnlargementBundle) -> list[tuple]:
    """Conditional law of tau on each terminal F-atom (states 1..N+1)."""
    space, tau = bundle.space, bundle.tau
    N = space.horizon
    rows = []
    for atom in space.F[N].atoms:
        w = space.weights[atom]
        mass = w.sum()
        rows.append(tuple(w[tau.values[atom] == u].sum() / mass for u in range(1, N + 2)))
    return rows


def is_independent(bundle: EnlargementBundle) -> bool:
    """tau independent of the market: identical conditional law on every path."""
    rows = death_law_by_market(bundle)
    space = bundle.space
    first = np.array(rows[0], dtype=object if space.exact else float)
    return all(space.close(np.array(r, dtype=first.dtype), first) for r in rows[1:])


def survival_surface(space: FilteredSpace, tau: RandomTime, s: int) -> Process:
    """t -> G_t(s) = P(tau > s | F_t)."""
    if not 0 <= s <= space.horizon:
        raise ValueError(f"survival time {s} outside 0..{space.horizon}")
    ind = space.indicator(tau.alive(s))
    vals = space.zeros((space.horizon + 1, space.n))
    for t in range(space.horizon + 1):
        vals[t] = space.F.cond_exp(ind, t)
    return Process(vals, space.F, ADAPTED, check=False, name=f"G({s})")


def compensator_identity_check(V, bundle: EnlargementBundle) -> Process:
    """(V^tau)^{p,G} - G_-^{-1} 1]0,tau] . (Gtilde . V)^{p,F}, zeroed off {G_- > 0}."""
    values = V.values if isinstance(V, Process) else np.asarray(V)
    space = bundle.space
    F, Gf = bundle.F, bundle.gfilt
    dV = delta(values)
    at_risk = bundle.at_risk()
    Gm = bundle.G_minus
    positive = Gm > 0
    lhs = space.zeros(values.shape)
    rhs_num = space.zeros(values.shape)
    for s in range(1, values.shape[0]):
        lhs[s] = Gf.cond_exp(space.indicator(at_risk[s]) * dV[s], s - 1)
        rhs_num[s] = F.cond_exp(bundle.Gtilde.values[s] * dV[s], s - 1)
    rhs = safe_divide(rhs_num, Gm, at_risk & positive, space)
    diff = (lhs - rhs) * space.indicator(positive)
    return bundle.on_G(cumulate(diff), tag=PREDICTABLE, name="compensator-residual")
