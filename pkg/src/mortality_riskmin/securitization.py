"""Mortality-linked securities (pure endowment, longevity bond): price
processes, their GKW decompositions under G and hedging with them as extra
traded assets.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .calculus import conditional_moment_ratio, gkw, integrate_values, is_martingale
from .enlargement import EnlargementBundle, hat_transform, is_independent
from .hedging import Claim, HedgeReport, _assemble, _check_report, _scalar_asset, evaluate_strategy, hedge_G, phi_m
from .linalg import solve_min_norm
from .representation import _running, _survival_values, _term
from .space import (
    PREDICTABLE,
    InvariantError,
    Process,
    cumulate,
    delta,
    lag,
    ratio,
    safe_divide,
)

COLLINEAR_TOL = 1e-9


class SecuritizationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Security:
    """Pure endowment paying g 1{tau > T} at T, or longevity bond paying G_T."""

    kind: str
    term: int | None = None
    benefit: object = None

    def __post_init__(self):
        if self.kind not in ("endowment", "bond"):
            raise ValueError(f"unknown security kind {self.kind!r}")
        if self.kind == "bond" and self.benefit is not None:
            raise ValueError("the longevity bond has no benefit argument")

    @classmethod
    def endowment(cls, term=None, g=None) -> "Security":
        return cls("endowment", term, g)

    @classmethod
    def bond(cls, term=None) -> "Security":
        return cls("bond", term)

    @property
    def label(self) -> str:
        base = "P" if self.kind == "endowment" else "B"
        return f"{base}(T={self.term})" if self.term is not None else base

    def with_term(self, term: int) -> "Security":
        return self if self.term is not None else Security(self.kind, term, self.benefit)


def as_security(spec, default_term: int | None = None) -> Security:
    if isinstance(spec, Security):
        sec = spec
    elif isinstance(spec, str):
        sec = Security(spec)
    else:
        raise TypeError(f"cannot interpret {spec!r} as a security")
    return sec.with_term(default_term) if default_term is not None else sec


@dataclass
class SecurityPrice:
    security: Security
    price: Process
    formula: np.ndarray
    residual: np.ndarray
    terms: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.price.filtration.space.is_zero(self.residual)


@dataclass
class SecurityDecomposition:
    """price - price_0 = phi . S^tau + residual."""

    security: Security
    price: Process
    phi: Process
    residual: Process
    phi_F: Process
    residual_F: Process
    direct_gap: float = 0.0

    @property
    def kind(self) -> str:
        return self.security.kind


def bond_ingredients(bundle: EnlargementBundle, T: int) -> dict:
    """D-bar (dual optional projection of G_T 1{tau <= .}), xi^(G) and M^(B).

    Survival past the horizon counts as a death after T, so the mass beyond T
    collapses to E[G_T 1{tau > T} | F_T] = G_T^2.
    """
    space = bundle.space
    N = space.horizon
    GT = bundle.G.values[T]
    tau = bundle.tau.values
    dDbar = space.zeros((N + 1, space.n))
    for u in range(1, N + 1):
        dDbar[u] = bundle.F.cond_exp(GT * space.indicator(tau == u), u)
    Dbar = cumulate(dDbar)
    xiG = ratio(dDbar, delta(bundle.DoF.values), space)
    xiG[0] = xiG[0] * 0
    MB = _running(space, T, Dbar[T] + GT * GT, bundle.F)
    return {"Dbar": Dbar, "xi_G": xiG, "M_B": MB, "G_T": GT}


def _equivalent_claim(sec: Security, bundle: EnlargementBundle) -> Claim:
    """The security's price is the G-value of an insurance claim."""
    T = _term(bundle, sec.term)
    if sec.kind == "endowment":
        g = 1 if sec.benefit is None else sec.benefit
        return Claim.pure_endowment(_survival_values(g, bundle, T), T)
    ing = bond_ingredients(bundle, T)
    return Claim.endowment(ing["G_T"], ing["xi_G"], T)


def direct_price(sec: Security, bundle: EnlargementBundle) -> Process:
    """E[g 1{tau > T} | G_t], or the stopped E[G_T | G_t] for the bond."""
    space = bundle.space
    T = _term(bundle, sec.term)
    N = space.horizon
    out = space.zeros((N + 1, space.n))
    if sec.kind == "endowment":
        g = _survival_values(1 if sec.benefit is None else sec.benefit, bundle, T)
        pay = g * space.indicator(bundle.tau.values > T)
        for t in range(N + 1):
            out[t] = bundle.gfilt.cond_exp(pay, t)
        return bundle.on_G(out, name=sec.label)
    GT = bundle.G.values[T]
    for t in range(N + 1):
        out[t] = bundle.gfilt.cond_exp(GT, t)
    return bundle.stop(bundle.on_G(out, name=sec.label))


def price_security(sec, S, bundle: EnlargementBundle) -> SecurityPrice:
    """Direct price and the closed-form price decomposition, term by term."""
    sec = as_security(sec)
    space = bundle.space
    T = _term(bundle, sec.term)
    sec = sec.with_term(T)
    Gm = bundle.G_minus
    cut = bundle.at_risk(T)
    t = np.arange(space.horizon + 1)[:, None]
    live = bundle.before_R() & (t <= T) & (t >= 1)
    m_hat = bundle.m_hat
    dNG = delta(bundle.NG.values)
    price = direct_price(sec, bundle)
    if sec.kind == "endowment":
        g = _survival_values(1 if sec.benefit is None else sec.benefit, bundle, T)
        Mg = _running(space, T, g * bundle.G.values[T], bundle.F)
        M_hat = hat_transform(Mg, bundle, check=False).values
        fin = cumulate(safe_divide(delta(M_hat), Gm, cut, space))
        cor = -cumulate(safe_divide(lag(Mg) * delta(m_hat), Gm * Gm, cut, space))
        mort = -cumulate(space.indicator(live) * safe_divide(Mg, bundle.G.values, live, space) * dNG)
        terms = {"M_g": Mg, "financial": fin, "correlation": cor, "mortality": mort}
        formula = price.values[0, 0] + fin + cor + mort
    else:
        ing = bond_ingredients(bundle, T)
        MB, Dbar, xiG = ing["M_B"], ing["Dbar"], ing["xi_G"]
        M_hat = hat_transform(MB, bundle, check=False).values
        fin = cumulate(safe_divide(delta(M_hat), Gm, cut, space))
        cor = -cumulate(safe_divide((lag(MB) - lag(Dbar)) * delta(m_hat), Gm * Gm, cut, space))
        coef = (xiG * bundle.G.values - MB + Dbar)
        mort = cumulate(space.indicator(live) * safe_divide(coef, bundle.G.values, live, space) * dNG)
        lump = space.zeros(fin.shape)
        tau = bundle.tau.values
        for i in range(space.n):
            u = tau[i]
            if u <= space.horizon:
                lump[u:, i] = price.values[u, i] - xiG[u, i]
        terms = {"M_B": MB, "Dbar": Dbar, "xi_G": xiG, "financial": fin, "correlation": cor,
                 "mortality": mort, "post_death": lump}
        formula = price.values[0, 0] + fin + cor + mort + lump
    return SecurityPrice(sec, price, formula, price.values - formula, terms)


def independent_endowment_price(g, T: int, bundle: EnlargementBundle, literal: bool = False) -> np.ndarray:
    """Endowment price when tau is independent of the market.

    P_0 + sum_{s <= tau ^ T} p_T dU_s / P(tau >= s) - sum_{s <= T} p_T U_s / P(tau > s) dN^G_s
    with U = E[g | F] and p_T = P(tau > T). ``literal`` drops the financial leg and
    uses g in place of U, which is only right for deterministic g.
    """
    space = bundle.space
    if not is_independent(bundle):
        raise ValueError("predicate not satisfied: tau is not independent of the market")
    g = _survival_values(g, bundle, T)
    G = bundle.G.values
    pT = G[T, 0]
    if pT == 0:
        raise ValueError("predicate not satisfied: P(tau > T) = 0")
    U = _running(space, T, g, bundle.F)
    t = np.arange(space.horizon + 1)[:, None]
    live = bundle.before_R() & (t <= T) & (t >= 1)
    dNG = delta(bundle.NG.values)
    P0 = pT * bundle.F.cond_exp(g, 0)
    if literal:
        coef = np.broadcast_to(g, U.shape)
        return P0 - cumulate(space.indicator(live) * safe_divide(pT * coef, G, live, space) * dNG)
    fin = cumulate(safe_divide(pT * delta(U), bundle.G_minus, bundle.at_risk(T), space))
    mort = cumulate(space.indicator(live) * safe_divide(pT * U, G, live, space) * dNG)
    return P0 + fin - mort


def security_gkw(sec, S, bundle: EnlargementBundle, check: bool = True) -> SecurityDecomposition:
    """(phi^(.,G), L^(.,G)) of a security price from the F-level GKW pair,
    compared with the direct G-level GKW against S^tau."""
    sec = as_security(sec)
    S = _scalar_asset(S, bundle)
    T = _term(bundle, sec.term)
    sec = sec.with_term(T)
    key = ("security_gkw", sec.kind, T, id(S.values), check) if sec.benefit is None else None
    hit = bundle.cache.get(key) if key else None
    if hit is not None and hit[0] is S.values:
        return hit[1]
    claim = _equivalent_claim(sec, bundle)
    K, g = claim.legs(bundle)
    from .representation import claim_martingale

    M, J = claim_martingale(bundle, T, death=K, survival=g)
    pm = phi_m(S, bundle, check=check)
    parts = gkw(M, S, bundle.F, check=check)
    report = _assemble(claim, S, bundle, parts.theta.values, parts.residual.values, M.values, J,
                       K, pm, "transfer", False, False)
    price = direct_price(sec, bundle)
    space = bundle.space
    gap = price.values - price.values[0, 0] - integrate_values(
        report.xi.values, report.assets[0].values) - report.residual.values
    if check and not space.is_zero(gap):
        raise InvariantError(f"{sec.label}: price != price_0 + phi . S^tau + L")
    direct = gkw(price, report.assets[0], bundle.gfilt, check=check)
    cut = bundle.at_risk(T)
    diff = (direct.theta.values - report.xi.values)[cut]
    dev = max((abs(float(v)) for v in diff), default=0.0)
    if check and not (space.is_zero(direct.residual.values - report.residual.values)
                      and space.is_zero(diff if diff.size else space.zeros(1))):
        raise InvariantError(f"{sec.label}: formula decomposition differs from direct GKW")
    out = SecurityDecomposition(sec, price, bundle.on_G(report.xi.values, PREDICTABLE, name="phi"),
                                bundle.on_G(report.residual.values, name="L"),
                                parts.theta, parts.residual, dev)
    if key:
        bundle.cache[key] = (S.values, out)
    return out


def _collinear(prod: np.ndarray, space) -> np.ndarray:
    if space.exact:
        return np.vectorize(lambda v: v == 1, otypes=[bool])(prod)
    return np.abs(prod.astype(float) - 1) <= COLLINEAR_TOL


def hedge_with_securities(claim: Claim, instruments, S, bundle: EnlargementBundle,
                          degenerate: str = "min_norm", pay_at_term: bool = False,
                          check: bool = True) -> HedgeReport:
    """Risk-minimizing hedge in (S^tau, P^(1)), (S^tau, B^tau) or (S^tau, P^(1), B^tau).

    Positions in the securities come from sequential orthogonalization of
    the claim residual against the securities' residuals. With both
    securities, ``degenerate`` picks what happens on atoms where the two
    residuals are conditionally collinear: "min_norm" solves the 2x2
    conditional normal equations with the minimum-norm solution, "zero"
    sets both positions to zero.
    """
    if degenerate not in ("min_norm", "zero"):
        raise ValueError("degenerate must be 'min_norm' or 'zero'")
    instruments = list(instruments) if isinstance(instruments, (list, tuple)) else [instruments]
    if not instruments:
        raise ValueError("instrument set is empty")
    T = _term(bundle, claim.term)
    secs = [as_security(i, T) for i in instruments]
    kinds = [s.kind for s in secs]
    if len(secs) > 2 or len(set(kinds)) != len(kinds):
        raise ValueError("instruments must be a subset of {endowment, bond}")
    secs.sort(key=lambda s: s.kind != "endowment")
    S = _scalar_asset(S, bundle)
    space = bundle.space
    gf = bundle.gfilt
    base = hedge_G(claim, S, bundle, pay_at_term, check)
    decs = [security_gkw(s, S, bundle, check) for s in secs]
    Lh = base.residual.values
    extra = {"base": base, "decompositions": decs}
    if len(decs) == 1:
        positions = [conditional_moment_ratio(Lh, decs[0].residual, gf)]
        model = "bond" if secs[0].kind == "bond" else "endowment"
    else:
        LE, LB = decs[0].residual, decs[1].residual
        theta = conditional_moment_ratio(LE, LB, gf)
        psi = conditional_moment_ratio(LB, LE, gf)
        x_E = conditional_moment_ratio(Lh, LE, gf)
        x_B = conditional_moment_ratio(Lh, LB, gf)
        prod = psi * theta
        coll = _collinear(prod, space)
        coll[0] = False
        ok = ~coll
        denom = np.where(ok, 1 - prod, 1)
        p2 = space.zeros(Lh.shape)
        p3 = space.zeros(Lh.shape)
        p2[ok] = ((x_E - psi * x_B)[ok] / denom[ok])
        p3[ok] = ((x_B - theta * x_E)[ok] / denom[ok])
        if coll.any():
            if degenerate == "min_norm":
                _fill_collinear(p2, p3, coll, Lh, LE.values, LB.values, bundle)
            if coll[1:].all():
                warnings.warn("instrument residuals are collinear on every atom", SecuritizationWarning)
            elif degenerate == "zero":
                warnings.warn("collinear instrument residuals: security positions set to zero on "
                              f"{int(coll.sum())} cells", SecuritizationWarning)
        positions = [p2, p3]
        model = "both"
        extra.update({"theta": theta, "psi": psi, "collinear": coll})
    xi1 = base.xi.values.copy()
    L = Lh.copy()
    for dec, pos in zip(decs, positions):
        xi1 = xi1 - dec.phi.values * pos
        L = L - integrate_values(pos, dec.residual.values)
    strategy = [bundle.on_G(xi1, PREDICTABLE, name="xi_S")]
    strategy += [bundle.on_G(p, PREDICTABLE, name=f"xi_{d.security.label}") for d, p in zip(decs, positions)]
    assets = [base.assets[0]] + [d.price for d in decs]
    V, C, R = evaluate_strategy(strategy, claim, assets, bundle, pay_at_term)
    report = HedgeReport(base.initial_capital, strategy, bundle.on_G(L, name="L"), V, C, R,
                         base.claim_value, assets, f"securitized-{model}", T, extra)
    if check:
        # zeroed positions on collinear cells are not a projection, so only
        # the bookkeeping identities hold there
        suboptimal = model == "both" and degenerate == "zero" and bool(extra["collinear"].any())
        _check_report(report, bundle, orthogonality=not suboptimal)
    return report


def _fill_collinear(p2, p3, coll, Lh, LE, LB, bundle):
    space = bundle.space
    gf = bundle.gfilt
    dh, dE, dB = delta(Lh), delta(LE), delta(LB)
    for s in range(1, Lh.shape[0]):
        if not coll[s].any():
            continue
        for atom in gf[s - 1].atoms:
            if not coll[s][atom[0]]:
                continue
            w = space.weights[atom]
            e, b, h = dE[s][atom], dB[s][atom], dh[s][atom]
            gram = [[(w * e * e).sum(), (w * e * b).sum()], [(w * e * b).sum(), (w * b * b).sum()]]
            rhs = [(w * e * h).sum(), (w * b * h).sum()]
            sol = solve_min_norm(gram, rhs, exact=space.exact)
            p2[s][atom] = sol[0]
            p3[s][atom] = sol[1]


def securities_martingality(bundle: EnlargementBundle, T: int) -> dict:
    """is_martingale under G for P^(1) and B^tau."""
    return {s.label: is_martingale(direct_price(s, bundle), bundle.gfilt)
            for s in (Security.endowment(T), Security.bond(T))}
