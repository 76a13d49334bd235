"""Claim martingales and the three-part optional martingale representation
of G-martingales H_t = E[h_tau | G_t] (pure financial, correlation, pure
mortality).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import are_orthogonal, is_martingale
from .enlargement import EnlargementBundle, hat_transform
from .space import (
    ADAPTED,
    PREDICTABLE,
    InvariantError,
    MeasurabilityError,
    Process,
    cumulate,
    delta,
    lag,
    measurability_violation,
    safe_divide,
)


def _as_values(h, bundle: EnlargementBundle, tag: str = ADAPTED, name: str = "h") -> np.ndarray:
    space = bundle.space
    shape = (space.horizon + 1, space.n)
    if h is None:
        return space.zeros(shape)
    values = h.values if isinstance(h, Process) else np.asarray(h)
    if values.shape != shape:
        raise ValueError(f"{name} has shape {values.shape}, expected {shape}")
    values = space.array(values) if (values.dtype == object) != space.exact else values
    bad = measurability_violation(values, bundle.F, tag)
    if bad is not None:
        raise MeasurabilityError(f"{name} is not F-{tag} at t={bad}")
    return values


def _term(bundle: EnlargementBundle, term) -> int:
    T = bundle.horizon if term is None else int(term)
    if not 1 <= T <= bundle.horizon:
        raise ValueError(f"term {T} outside 1..{bundle.horizon}")
    return T


def _running(space, T: int, terminal: np.ndarray, F) -> np.ndarray:
    out = space.zeros((space.horizon + 1, space.n))
    for t in range(space.horizon + 1):
        out[t] = F.cond_exp(terminal, min(t, T))
    return out


def death_leg_value(h: np.ndarray, bundle: EnlargementBundle, T: int) -> np.ndarray:
    """(h . D^o)_t restricted to u <= T."""
    inc = h * delta(bundle.DoF.values)
    inc[T + 1:] = inc[T + 1:] * 0
    return cumulate(inc)


def claim_martingale(bundle: EnlargementBundle, term: int | None = None, death=None,
                     survival=None) -> tuple[Process, np.ndarray]:
    """F-martingale of the claim K_tau 1{tau<=T} + g 1{tau>T} and J = M - (K . D^o).

    M_t = E[sum_{u<=T} K_u dD^o_u + g G_T | F_{t ^ T}].
    """
    space = bundle.space
    T = _term(bundle, term)
    K = _as_values(death, bundle, name="death benefit")
    g = _survival_values(survival, bundle, T)
    leg = death_leg_value(K, bundle, T)
    terminal = leg[T] + g * bundle.G.values[T]
    M = _running(space, T, terminal, bundle.F)
    return Process(M, bundle.F, ADAPTED, check=False, name="M"), M - leg


def _survival_values(g, bundle: EnlargementBundle, T: int) -> np.ndarray:
    space = bundle.space
    if g is None:
        return space.zeros(space.n)
    g = g.values[T] if isinstance(g, Process) else np.asarray(g)
    if g.ndim == 0:
        g = np.full(space.n, g, dtype=object)
    g = space.array(g)
    if not bundle.F.measurable(g, T):
        raise MeasurabilityError(f"survival benefit is not F_{T}-measurable")
    return g


def death_claim_martingale(h, bundle: EnlargementBundle, term: int | None = None) -> Process:
    """M^h_t = E[sum_{u<=T} h_u dD^o_u | F_t]."""
    M, _ = claim_martingale(bundle, term, death=h)
    M.name = "Mh"
    return M


def predictable_claim_martingale(h, bundle: EnlargementBundle, term: int | None = None) -> Process:
    """m^h_t = E[sum_{u<=T} h_u dF_u | F_t] with F = 1 - G, for predictable h."""
    space = bundle.space
    T = _term(bundle, term)
    hv = _as_values(h, bundle, tag=PREDICTABLE, name="h")
    inc = hv * (-delta(bundle.G.values))
    inc[T + 1:] = inc[T + 1:] * 0
    terminal = cumulate(inc)[T]
    return Process(_running(space, T, terminal, bundle.F), bundle.F, ADAPTED, check=False, name="mh")


def claim_payoff(bundle: EnlargementBundle, term: int | None = None, death=None,
                 survival=None) -> np.ndarray:
    """Outcome-wise payoff K_tau 1{tau<=T} + g 1{tau>T}."""
    space = bundle.space
    T = _term(bundle, term)
    K = _as_values(death, bundle, name="death benefit")
    g = _survival_values(survival, bundle, T)
    tau = bundle.tau.values
    pay = space.zeros(space.n)
    for i in range(space.n):
        pay[i] = K[tau[i], i] if tau[i] <= T else g[i]
    return pay


def g_martingale(payoff: np.ndarray, bundle: EnlargementBundle) -> Process:
    """H_t = E[payoff | G_t]."""
    space = bundle.space
    vals = space.zeros((space.horizon + 1, space.n))
    for t in range(space.horizon + 1):
        vals[t] = bundle.gfilt.cond_exp(payoff, t)
    return bundle.on_G(vals, name="H")


@dataclass
class Representation:
    H: Process
    pure_financial: Process
    correlation: Process
    pure_mortality: Process
    Mh: Process
    J: np.ndarray
    term: int

    @property
    def components(self) -> dict:
        return {"pure_financial": self.pure_financial,
                "correlation": self.correlation,
                "pure_mortality": self.pure_mortality}

    def reconstruction_residual(self) -> np.ndarray:
        H = self.H.values
        return H - H[0] - (self.pure_financial.values + self.correlation.values
                           + self.pure_mortality.values)


def representation_parts(M: np.ndarray, J: np.ndarray, h: np.ndarray,
                         bundle: EnlargementBundle, T: int) -> tuple[np.ndarray, ...]:
    """Increments-integrated pure-financial, correlation and pure-mortality parts."""
    space = bundle.space
    Gm = bundle.G_minus
    at_risk = bundle.at_risk(T)
    Mhat = hat_transform(M, bundle, check=False).values
    mhat = bundle.m_hat
    pf = safe_divide(delta(Mhat), Gm, at_risk, space)
    cor = -safe_divide(lag(J) * delta(mhat), Gm * Gm, at_risk, space)
    t = np.arange(space.horizon + 1)[:, None]
    live = bundle.before_R() & (t <= T) & (t >= 1)
    coef = h - safe_divide(J, bundle.G.values, live, space)
    pm = space.indicator(live) * coef * delta(bundle.NG.values)
    return cumulate(pf), cumulate(cor), cumulate(pm)


def optional_representation(h, bundle: EnlargementBundle, term: int | None = None,
                            survival=None, check: bool = True) -> Representation:
    """Decompose H_t = E[h_tau 1{tau<=T} + g 1{tau>T} | G_t] into three G-martingales.

    ``h`` is the F-optional death-benefit process (values at 1..T are used);
    ``survival`` is an optional F_T-measurable benefit paid on {tau > T}.
    """
    T = _term(bundle, term)
    hv = _as_values(h, bundle, name="h")
    M, J = claim_martingale(bundle, T, death=hv, survival=survival)
    payoff = claim_payoff(bundle, T, death=hv, survival=survival)
    H = g_martingale(payoff, bundle)
    pf, cor, pm = representation_parts(M.values, J, hv, bundle, T)
    rep = Representation(H, bundle.on_G(pf, name="pure_financial"),
                         bundle.on_G(cor, name="correlation"),
                         bundle.on_G(pm, name="pure_mortality"), M, J, T)
    if check:
        space = bundle.space
        if not space.is_zero(rep.reconstruction_residual()):
            raise InvariantError("representation does not reconstruct H - H_0")
        diag = are_orthogonal(rep.pure_mortality, rep.pure_financial + rep.correlation,
                              bundle.gfilt)
        if not diag.ok:
            raise InvariantError(f"pure mortality part not orthogonal: {diag.detail}")
    return rep


def representation_martingality(rep: Representation, bundle: EnlargementBundle) -> dict:
    """is_martingale under G for each component."""
    return {k: is_martingale(v, bundle.gfilt) for k, v in rep.components.items()}
