"""Risk-minimizing hedges of mortality claims in the enlarged filtration.

The main route builds the G-strategy from F-level GKW decompositions
(transfer formula); ``hedge_G_direct`` decomposes the G-martingale of the
claim against the stopped asset and serves as the independent check.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calculus import GkwParts, are_orthogonal, bracket, gkw, integrate_values
from .enlargement import (
    EnlargementBundle,
    hat_transform,
    is_independent,
    is_pseudo_stopping,
    survival_surface,
    validate_model,
)
from .representation import (
    _as_values,
    _running,
    _survival_values,
    _term,
    claim_martingale,
    claim_payoff,
    death_leg_value,
    g_martingale,
)
from .space import (
    ADAPTED,
    PREDICTABLE,
    InvariantError,
    Process,
    cumulate,
    delta,
    lag,
    safe_divide,
)


@dataclass
class Claim:
    """Payoff g 1{tau > T} + K_tau 1{tau <= T}.

    ``survival`` is an F_T-measurable array (or scalar), ``death`` an
    F-adapted array of shape (N+1, n). An annuity accumulator C sets
    K = C and g = C_T.
    """

    term: int
    survival: object = None
    death: object = None
    annuity: object = None
    name: str = ""

    @classmethod
    def pure_endowment(cls, g, term: int) -> "Claim":
        return cls(term, survival=g, name="pure endowment")

    @classmethod
    def term_insurance(cls, K, term: int) -> "Claim":
        return cls(term, death=K, name="term insurance")

    @classmethod
    def endowment(cls, g, K, term: int) -> "Claim":
        return cls(term, survival=g, death=K, name="endowment")

    @classmethod
    def annuity_claim(cls, C, term: int) -> "Claim":
        return cls(term, annuity=C, name="annuity")

    def legs(self, bundle: EnlargementBundle) -> tuple[np.ndarray, np.ndarray]:
        """(K values, g values) with the annuity convention resolved."""
        T = _term(bundle, self.term)
        if self.annuity is not None:
            if self.survival is not None or self.death is not None:
                raise ValueError("an annuity claim carries no separate survival/death benefit")
            C = check_accumulator(self.annuity, bundle)
            return C, C[T].copy()
        K = _as_values(self.death, bundle, name="death benefit")
        return K, _survival_values(self.survival, bundle, T)

    def payoff(self, bundle: EnlargementBundle) -> np.ndarray:
        K, g = self.legs(bundle)
        return claim_payoff(bundle, self.term, death=K, survival=g)

    @property
    def kind(self) -> str:
        if self.annuity is not None:
            return "annuity"
        if self.death is None:
            return "pure endowment"
        if self.survival is None:
            return "term insurance"
        return "endowment"


def check_accumulator(C, bundle: EnlargementBundle) -> np.ndarray:
    values = _as_values(C, bundle, name="annuity accumulator")
    space = bundle.space
    if not space.is_zero(values[0]):
        raise ValueError("annuity accumulator must start at 0")
    inc = delta(values)[1:]
    if np.any(inc < -space.tolerance(values)):
        raise ValueError("annuity accumulator must be nondecreasing")
    return values


@dataclass
class HedgeReport:
    """Strategy, residual and value/cost/risk processes for one claim."""

    initial_capital: object
    strategy: list
    residual: Process
    value: Process
    cost: Process
    risk: Process
    claim_value: Process
    assets: list
    route: str
    term: int
    attribution: dict = field(default_factory=dict)

    @property
    def xi(self) -> Process:
        return self.strategy[0]

    @property
    def risk0(self):
        return self.risk.values[0, 0]

    def reconstruction_residual(self) -> np.ndarray:
        H = self.claim_value.values
        gains = sum(integrate_values(x.values, a.values) for x, a in zip(self.strategy, self.assets))
        return H - H[0] - gains - self.residual.values


@dataclass
class PhiM:
    U: Process
    phi: Process
    Lm: Process
    identity_residual: np.ndarray


class ModelAssumptionError(ValueError):
    """The pair (S, tau) violates a structure condition the formulas need."""


def _require_model(S, bundle: EnlargementBundle):
    report = validate_model(S, bundle)
    if not report.ok:
        failed = [name for name, d in report.items() if not d.ok]
        raise ModelAssumptionError("model assumptions fail: " + ", ".join(failed))


def _scalar_asset(S, bundle) -> Process:
    if isinstance(S, (list, tuple)):
        if len(S) != 1:
            raise NotImplementedError(
                "the transfer formula is one-dimensional; use hedge_G_direct for several assets")
        S = S[0]
    if not isinstance(S, Process):
        S = Process(S, bundle.F, ADAPTED, check=False)
    return S


def phi_m(S, bundle: EnlargementBundle, check: bool = True) -> PhiM:
    """U = 1{G_- > 0} . [S, m] and its GKW pair (phi^(m), L^(m)) against S."""
    S = _scalar_asset(S, bundle)
    key = ("phi_m", id(S.values), check)
    hit = bundle.cache.get(key)
    if hit is not None and hit[0] is S.values:
        return hit[1]
    space = bundle.space
    if check:
        _require_model(S, bundle)
    Gm = bundle.G_minus
    positive = Gm > 0
    inc = space.indicator(positive) * delta(S.values) * delta(bundle.m.values)
    U = Process(cumulate(inc), bundle.F, ADAPTED, check=False, name="U")
    parts = gkw(U, S, bundle.F, check=check)
    phi, Lm = parts.theta, parts.residual
    t = np.arange(space.horizon + 1)[:, None]
    live = positive & (t >= 1)
    if np.any((Gm + phi.values)[live] <= 0):
        raise InvariantError("G_- + phi^(m) is not positive on {G_- > 0}")
    if np.any(Gm[bundle.at_risk()] <= 0):
        raise InvariantError("]0, tau] is not contained in {G_- > 0}")
    Shat = hat_transform(S, bundle, check=False).values
    Lmhat = hat_transform(Lm, bundle, check=False).values
    lhs = integrate_values(Gm + phi.values, Shat)
    Stau = bundle.stop(S).values
    rhs = integrate_values(Gm, Stau) - (Lmhat - Lmhat[0])
    resid = lhs - rhs
    if check and not space.is_zero(resid):
        raise InvariantError("(G_- + phi^(m)) . S^ != G_- . S^tau - L^(m)^")
    out = PhiM(U, phi.retag(PREDICTABLE, check=False), Lm, resid)
    bundle.cache[key] = (S.values, out)
    return out


def hedge_F(claim_value, S, term: int, filtration, check: bool = True) -> GkwParts:
    """GKW of t -> E[claim_value | F_{t ^ T}] against S under F."""
    space = filtration.space
    values = _running(space, term, space.array(claim_value) if not isinstance(claim_value, np.ndarray)
                      else claim_value, filtration)
    M = Process(values, filtration, ADAPTED, check=False, name="M")
    return gkw(M, S, filtration, check=check)


def payment_process(claim: Claim, bundle: EnlargementBundle, pay_at_term: bool = False) -> np.ndarray:
    """A_t: death benefit paid at tau (or everything at T when ``pay_at_term``)."""
    space = bundle.space
    T = _term(bundle, claim.term)
    K, g = claim.legs(bundle)
    tau = bundle.tau.values
    A = space.zeros((space.horizon + 1, space.n))
    payoff = claim.payoff(bundle)
    for t in range(space.horizon + 1):
        if pay_at_term:
            if t >= T:
                A[t] = payoff
            continue
        for i in range(space.n):
            if tau[i] <= min(t, T):
                A[t, i] = K[tau[i], i]
            elif tau[i] > T and t >= T:
                A[t, i] = g[i]
    return A


def evaluate_strategy(xi, claim: Claim, assets, bundle: EnlargementBundle,
                      pay_at_term: bool = False, filtration=None) -> tuple[Process, Process, Process]:
    """Value V_t = E[A_N - A_t | .], cost C = V - xi.X + A, risk R_t = E[(C_N - C_t)^2 | .]."""
    filt = filtration or bundle.gfilt
    space = bundle.space
    xis = list(xi) if isinstance(xi, (list, tuple)) else [xi]
    assets = list(assets) if isinstance(assets, (list, tuple)) else [assets]
    A = payment_process(claim, bundle, pay_at_term)
    N = space.horizon
    V = space.zeros(A.shape)
    for t in range(N + 1):
        V[t] = filt.cond_exp(A[N] - A[t], t)
    gains = space.zeros(A.shape)
    for x, a in zip(xis, assets):
        gains = gains + integrate_values(_vals(x), _vals(a))
    C = V - gains + A
    R = space.zeros(A.shape)
    for t in range(N + 1):
        d = C[N] - C[t]
        R[t] = filt.cond_exp(d * d, t)
    mk = lambda v, n: Process(v, filt, ADAPTED, check=False, name=n)
    return mk(V, "V"), mk(C, "C"), mk(R, "R")


def _vals(x):
    return x.values if isinstance(x, Process) else np.asarray(x)


def value_closed_form(claim: Claim, bundle: EnlargementBundle, pay_at_term: bool = False) -> np.ndarray:
    """Closed-form portfolio value on [0, T] from F-quantities.

    At term: h_tau 1{tau<=t} + 1{t<tau} E[h_tau 1{t<tau} | F_t] / G_t - 1{t=T} h_tau.
    At death: 1{t<tau, t<T} E[h_tau 1{t<tau} | F_t] / G_t.
    """
    space = bundle.space
    T = _term(bundle, claim.term)
    payoff = claim.payoff(bundle)
    tau = bundle.tau.values
    V = space.zeros((T + 1, space.n))
    for t in range(T + 1):
        alive = tau > t
        inner = bundle.F.cond_exp(payoff * space.indicator(alive), t)
        before = safe_divide(inner, bundle.G.values[t], alive, space)
        if pay_at_term:
            V[t] = before + payoff * space.indicator(~alive)
            if t == T:
                V[t] = V[t] - payoff
        elif t < T:
            V[t] = before
    return V


def _transfer(xiF: np.ndarray, phi: np.ndarray, bundle: EnlargementBundle, T: int) -> np.ndarray:
    Gm = bundle.G_minus
    return safe_divide(xiF, Gm + phi, bundle.at_risk(T), bundle.space)


def _assemble(claim: Claim, S: Process, bundle: EnlargementBundle, xiF: np.ndarray,
              LF: np.ndarray, M: np.ndarray, J: np.ndarray, K: np.ndarray, pm: PhiM,
              route: str, pay_at_term: bool, check: bool, extra: dict | None = None) -> HedgeReport:
    """G-strategy and residual from the F-pair (xi^F, L^F) of the claim."""
    space = bundle.space
    T = _term(bundle, claim.term)
    Gm = bundle.G_minus
    at_risk = bundle.at_risk(T)
    phi = pm.phi.values
    xiG = _transfer(xiF, phi, bundle, T)

    Lm_hat = hat_transform(pm.Lm, bundle, check=False).values
    LF_hat = hat_transform(LF, bundle, check=False).values
    m_hat = bundle.m_hat
    t = np.arange(space.horizon + 1)[:, None]
    live = bundle.before_R() & (t <= T) & (t >= 1)

    term_m = -cumulate(safe_divide(xiF, Gm * (Gm + phi), at_risk, space) * delta(Lm_hat))
    term_F = cumulate(safe_divide(delta(LF_hat), Gm, at_risk, space))
    term_c = -cumulate(safe_divide(lag(J) * delta(m_hat), Gm * Gm, at_risk, space))
    coef = K - safe_divide(J, bundle.G.values, live, space)
    term_pm = cumulate(space.indicator(live) * coef * delta(bundle.NG.values))
    L = term_m + term_F + term_c + term_pm

    H = g_martingale(claim.payoff(bundle), bundle)
    Stau = bundle.stop(S)
    xi = bundle.on_G(xiG, PREDICTABLE, name="xi")
    Lp = bundle.on_G(L, name="L")
    V, C, R = evaluate_strategy([xi], claim, [Stau], bundle, pay_at_term)
    attribution = {
        "xi_F": Process(xiF, bundle.F, PREDICTABLE, check=False, name="xi_F"),
        "L_F": Process(LF, bundle.F, ADAPTED, check=False, name="L_F"),
        "M": Process(M, bundle.F, ADAPTED, check=False, name="M"),
        "phi_m": pm.phi,
        "L_m": pm.Lm,
        "L_m_part": bundle.on_G(term_m, name="L_m_part"),
        "L_F_part": bundle.on_G(term_F, name="L_F_part"),
        "m_part": bundle.on_G(term_c, name="m_part"),
        "NG_part": bundle.on_G(term_pm, name="NG_part"),
    }
    attribution.update(extra or {})
    report = HedgeReport(H.values[0, 0], [xi], Lp, V, C, R, H, [Stau], route, T, attribution)
    if check:
        _check_report(report, bundle)
    return report


def _check_report(report: HedgeReport, bundle: EnlargementBundle, orthogonality: bool = True):
    space = bundle.space
    if not space.is_zero(report.reconstruction_residual()):
        raise InvariantError(f"{report.route}: H != H_0 + xi . X + L")
    for a in report.assets if orthogonality else ():
        diag = are_orthogonal(report.residual, a, bundle.gfilt)
        if not diag.ok:
            raise InvariantError(f"{report.route}: residual not orthogonal to {a.name}: {diag.detail}")
    if not space.close(report.cost.values, report.initial_capital + report.residual.values):
        raise InvariantError(f"{report.route}: cost != H_0 + L")


def hedge_G(claim: Claim, S, bundle: EnlargementBundle, pay_at_term: bool = False,
            check: bool = True) -> HedgeReport:
    """Risk-minimizing strategy under (S^tau, G) via the F-to-G transfer formula."""
    S = _scalar_asset(S, bundle)
    T = _term(bundle, claim.term)
    pm = phi_m(S, bundle, check=check)
    K, g = claim.legs(bundle)
    M, J = claim_martingale(bundle, T, death=K, survival=g)
    parts = gkw(M, S, bundle.F, check=check)
    return _assemble(claim, S, bundle, parts.theta.values, parts.residual.values, M.values, J,
                     K, pm, "transfer", pay_at_term, check)


def hedge_G_predictable(claim: Claim, S, bundle: EnlargementBundle, pay_at_term: bool = False,
                        check: bool = True) -> HedgeReport:
    """Transfer route for a term insurance with F-predictable benefit, through
    m^h = E[int h dF | F] instead of M^h."""
    S = _scalar_asset(S, bundle)
    if claim.kind != "term insurance":
        raise ValueError("the predictable route covers term insurance claims only")
    space = bundle.space
    T = _term(bundle, claim.term)
    h = _as_values(claim.death, bundle, tag=PREDICTABLE, name="death benefit")
    pm = phi_m(S, bundle, check=check)
    from .representation import predictable_claim_martingale

    mh = predictable_claim_martingale(h, bundle, T)
    parts = gkw(mh, S, bundle.F, check=check)
    xiF, LF = parts.theta.values, parts.residual.values
    Gm = bundle.G_minus
    at_risk = bundle.at_risk(T)
    t = np.arange(space.horizon + 1)[:, None]
    live = bundle.before_R() & (t <= T) & (t >= 1)
    hF = -delta(bundle.G.values) * h
    hF[T + 1:] = hF[T + 1:] * 0
    hdotF = cumulate(hF)
    Lm_hat = hat_transform(pm.Lm, bundle, check=False).values
    LF_hat = hat_transform(LF, bundle, check=False).values
    m_hat = bundle.m_hat
    xiG = _transfer(xiF, pm.phi.values, bundle, T)
    term_m = -cumulate(safe_divide(xiF, Gm * (Gm + pm.phi.values), at_risk, space) * delta(Lm_hat))
    term_F = cumulate(safe_divide(delta(LF_hat), Gm, at_risk, space))
    num_c = h * Gm - lag(mh.values) + lag(hdotF)
    term_c = cumulate(safe_divide(num_c * delta(m_hat), Gm * Gm, at_risk, space))
    coef = h - safe_divide(mh.values - hdotF, bundle.G.values, live, space)
    term_pm = cumulate(space.indicator(live) * coef * delta(bundle.NG.values))
    L = term_m + term_F + term_c + term_pm
    H = g_martingale(claim.payoff(bundle), bundle)
    Stau = bundle.stop(S)
    xi = bundle.on_G(xiG, PREDICTABLE, name="xi")
    V, C, R = evaluate_strategy([xi], claim, [Stau], bundle, pay_at_term)
    report = HedgeReport(H.values[0, 0], [xi], bundle.on_G(L, name="L"), V, C, R, H, [Stau],
                         "predictable", T, {"m_h": mh, "xi_F": parts.theta, "L_F": parts.residual})
    if check:
        _check_report(report, bundle)
    return report


def hedge_G_direct(claim: Claim, S, bundle: EnlargementBundle, instruments=(),
                   pay_at_term: bool = False, check: bool = True) -> HedgeReport:
    """GKW of H_t = E[payoff | G_t] against S^tau (and extra G-martingales)."""
    Ss = list(S) if isinstance(S, (list, tuple)) else [S]
    Ss = [s if isinstance(s, Process) else Process(s, bundle.F, ADAPTED, check=False) for s in Ss]
    assets = [bundle.stop(s) for s in Ss] + list(instruments)
    T = _term(bundle, claim.term)
    H = g_martingale(claim.payoff(bundle), bundle)
    parts = gkw(H, assets, bundle.gfilt, check=check)
    strategy = [p.retag(PREDICTABLE, check=False) for p in parts.integrand]
    V, C, R = evaluate_strategy(strategy, claim, assets, bundle, pay_at_term)
    report = HedgeReport(H.values[0, 0], strategy, parts.residual, V, C, R, H, assets,
                         "direct", T)
    if check:
        _check_report(report, bundle)
    return report


# -- special cases -----------------------------------------------------

def _deterministic(values: np.ndarray):
    return values.ravel()[0]


def independent_endowment_formula(g, T: int, S, bundle: EnlargementBundle) -> tuple[np.ndarray, np.ndarray]:
    """Closed form for a pure endowment when tau is independent of the market.

    xi_t = P(tau>T)/P(tau>=t) xi^g_t on {t <= tau};
    L_t = sum_{s<=t^tau} P(tau>T)/P(tau>=s) dL^g_s - sum_{s<=t^T} P(tau>T) U^g_s/P(tau>s) dN^G_s.
    """
    space = bundle.space
    S = _scalar_asset(S, bundle)
    g = _survival_values(g, bundle, T)
    U = Process(_running(space, T, g, bundle.F), bundle.F, ADAPTED, check=False)
    parts = gkw(U, S, bundle.F, check=False)
    pT = _deterministic(bundle.G.values[T])
    at_risk = bundle.at_risk(T)
    Gtil, Gv = bundle.Gtilde.values, bundle.G.values
    xi = safe_divide(pT * parts.theta.values, Gtil, at_risk, space)
    live = (np.arange(space.horizon + 1)[:, None] <= T) & (np.arange(space.horizon + 1)[:, None] >= 1)
    L = cumulate(safe_divide(pT * delta(parts.residual.values), Gtil, bundle.at_risk(), space)) \
        - cumulate(safe_divide(pT * U.values * delta(bundle.NG.values), Gv, live, space))
    return xi, L


def independent_annuity_formula(C, T: int, S, bundle: EnlargementBundle,
                                literal: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Closed form for an annuity when tau is independent of the market.

    xi_t = (P(tau>T) xi^{C_T}_t + xi^{C~_T}_t) / P(tau >= t) on {t <= tau}. The
    residual's N^G integrand is C_s - (E[C~_T - C~_s | F_s] + P(tau>T) U^{C_T}_s)/P(tau>s);
    ``literal=True`` instead uses -P(tau>T)/P(tau>s) and integrates L^{C~_T}
    against 1/P(tau>s) without stopping, which drops the death-leg terms.
    """
    space = bundle.space
    S = _scalar_asset(S, bundle)
    Cv = check_accumulator(C, bundle)
    CT = Cv[T].copy()
    tilde = death_leg_value(Cv, bundle, T)
    UC = Process(_running(space, T, CT, bundle.F), bundle.F, ADAPTED, check=False)
    Ut = Process(_running(space, T, tilde[T], bundle.F), bundle.F, ADAPTED, check=False)
    pC, pt = gkw(UC, S, bundle.F, check=False), gkw(Ut, S, bundle.F, check=False)
    pT = _deterministic(bundle.G.values[T])
    at_risk = bundle.at_risk(T)
    Gtil, Gv = bundle.Gtilde.values, bundle.G.values
    xi = safe_divide(pT * pC.theta.values + pt.theta.values, Gtil, at_risk, space)
    t = np.arange(space.horizon + 1)[:, None]
    live = (t <= T) & (t >= 1)
    dNG = delta(bundle.NG.values)
    if literal:
        L = cumulate(safe_divide(pT * delta(pC.residual.values), Gtil, bundle.at_risk(), space)) \
            + cumulate(safe_divide(delta(pt.residual.values), Gv, live, space)) \
            - cumulate(safe_divide(pT * dNG, Gv, live, space))
        return xi, L
    L = cumulate(safe_divide(pT * delta(pC.residual.values) + delta(pt.residual.values), Gtil,
                             bundle.at_risk(), space))
    remaining = Ut.values - tilde + pT * UC.values
    L = L + cumulate(space.indicator(live) * (Cv - safe_divide(remaining, Gv, live, space)) * dNG)
    return xi, L


def pseudo_stopping_formula(claim: Claim, S, bundle: EnlargementBundle) -> tuple[np.ndarray, np.ndarray]:
    """xi = xi^F / G_- on ]0, tau]; L = (1/G_-) 1]0,tau] . L^F + (K - J/G) 1[0,R[ . (N^G)^T."""
    space = bundle.space
    S = _scalar_asset(S, bundle)
    T = _term(bundle, claim.term)
    K, g = claim.legs(bundle)
    M, J = claim_martingale(bundle, T, death=K, survival=g)
    parts = gkw(M, S, bundle.F, check=False)
    Gm = bundle.G_minus
    at_risk = bundle.at_risk(T)
    xi = safe_divide(parts.theta.values, Gm, at_risk, space)
    t = np.arange(space.horizon + 1)[:, None]
    live = bundle.before_R() & (t <= T) & (t >= 1)
    L = cumulate(safe_divide(delta(parts.residual.values), Gm, at_risk, space))
    coef = K - safe_divide(J, bundle.G.values, live, space)
    L = L + cumulate(space.indicator(live) * coef * delta(bundle.NG.values))
    return xi, L


def special_case_formulas(claim: Claim, S, bundle: EnlargementBundle, case: str = "auto",
                          pay_at_term: bool = False) -> HedgeReport:
    """Closed forms valid under independence or pseudo-stopping, as a cross-check."""
    S = _scalar_asset(S, bundle)
    T = _term(bundle, claim.term)
    indep = is_independent(bundle) and _deterministic(bundle.G.values[T]) > 0
    pseudo = is_pseudo_stopping(bundle)
    if case == "auto":
        if indep and claim.kind in ("pure endowment", "annuity"):
            case = "independent"
        elif pseudo:
            case = "pseudo-stopping"
        else:
            raise ValueError("predicate not satisfied: tau is neither independent nor pseudo-stopping")
    if case == "independent":
        if not indep:
            raise ValueError("predicate not satisfied: tau is not independent with P(tau>T) > 0")
        if claim.kind == "pure endowment":
            xi, L = independent_endowment_formula(claim.survival, T, S, bundle)
        elif claim.kind == "annuity":
            xi, L = independent_annuity_formula(claim.annuity, T, S, bundle)
        else:
            raise ValueError("independence closed forms cover pure endowments and annuities")
    elif case == "pseudo-stopping":
        if not pseudo:
            raise ValueError("predicate not satisfied: tau is not a pseudo-stopping time")
        xi, L = pseudo_stopping_formula(claim, S, bundle)
    else:
        raise ValueError(f"unknown case {case!r}")
    H = g_martingale(claim.payoff(bundle), bundle)
    Stau = bundle.stop(S)
    xiP = bundle.on_G(xi, PREDICTABLE, name="xi")
    V, C, R = evaluate_strategy([xiP], claim, [Stau], bundle, pay_at_term)
    return HedgeReport(H.values[0, 0], [xiP], bundle.on_G(L, name="L"), V, C, R, H, [Stau],
                       case, T)


# -- attribution splits --------------------------------------------------

@dataclass
class SplitResult:
    """Attribution of the F-strategy of a survival-type claim."""

    U: Process
    GT: Process
    cor: Process
    Mg: Process
    parts: dict
    xi_F: np.ndarray
    L_F: np.ndarray
    direct: GkwParts
    ibp_residual: np.ndarray
    report: HedgeReport | None = None


def _survival_split(g: np.ndarray, T: int, S: Process, bundle: EnlargementBundle):
    space = bundle.space
    F = bundle.F
    U = Process(_running(space, T, g, F), F, ADAPTED, check=False, name="U^g")
    GT = survival_surface(space, bundle.tau, T)
    # every leg lives on [0, T]; past T the surface would still move off immersion
    GT.values[T + 1:] = GT.values[T]
    joint = Process(_running(space, T, g * space.indicator(bundle.tau.alive(T)), F), F,
                    ADAPTED, check=False)
    cov = joint.values - GT.values * U.values
    cor = Process(bracket(GT, U, F).values + cov, F, ADAPTED, check=False, name="Cor")
    Mg = Process(_running(space, T, g * bundle.G.values[T], F), F, ADAPTED, check=False, name="M^g")
    parts = {"g": gkw(U, S, F, check=False), "G_T": gkw(GT, S, F, check=False),
             "Cor": gkw(cor, S, F, check=False)}
    GTm, Um = lag(GT.values), lag(U.values)
    xi = GTm * parts["g"].theta.values + Um * parts["G_T"].theta.values + parts["Cor"].theta.values
    L = cumulate(GTm * delta(parts["g"].residual.values) + Um * delta(parts["G_T"].residual.values)
                 + delta(parts["Cor"].residual.values))
    ibp = (GT.values[0, 0] * U.values[0, 0] + integrate_values(GTm, U.values)
           + integrate_values(Um, GT.values) + cor.values)
    return U, GT, cor, Mg, parts, xi, L, Mg.values - ibp


def endowment_split(g, T: int, S, bundle: EnlargementBundle, pay_at_term: bool = False,
                    check: bool = True) -> SplitResult:
    """Financial / mortality / correlation attribution of a pure endowment."""
    S = _scalar_asset(S, bundle)
    space = bundle.space
    T = _term(bundle, T)
    g = _survival_values(g, bundle, T)
    U, GT, cor, Mg, parts, xi, L, ibp = _survival_split(g, T, S, bundle)
    direct = gkw(Mg, S, bundle.F, check=check)
    if check:
        if not space.close(xi, direct.theta.values):
            raise InvariantError("endowment split: combined xi^F differs from the direct GKW")
        if not space.close(L, direct.residual.values):
            raise InvariantError("endowment split: combined L^F differs from the direct GKW")
        if not space.is_zero(ibp):
            raise InvariantError("endowment split: integration by parts identity fails")
    claim = Claim.pure_endowment(g, T)
    pm = phi_m(S, bundle, check=check)
    M, J = claim_martingale(bundle, T, survival=g)
    report = _assemble(claim, S, bundle, xi, L, M.values, J, space.zeros(M.values.shape), pm,
                       "endowment-split", pay_at_term, check,
                       {"U^g": U, "G(T)": GT, "Cor": cor, "M^g": Mg})
    return SplitResult(U, GT, cor, Mg, parts, xi, L, direct, ibp, report)


def annuity_split(C, T: int, S, bundle: EnlargementBundle, pay_at_term: bool = False,
                  check: bool = True) -> SplitResult:
    """Attribution of an annuity: the endowment split for C_T plus the C~_T leg."""
    S = _scalar_asset(S, bundle)
    space = bundle.space
    T = _term(bundle, T)
    Cv = check_accumulator(C, bundle)
    CT = Cv[T].copy()
    U, GT, cor, Mg, parts, xi, L, ibp = _survival_split(CT, T, S, bundle)
    tilde = death_leg_value(Cv, bundle, T)
    Ut = Process(_running(space, T, tilde[T], bundle.F), bundle.F, ADAPTED, check=False, name="U^C~")
    parts["C~_T"] = gkw(Ut, S, bundle.F, check=False)
    xi = xi + parts["C~_T"].theta.values
    L = L + parts["C~_T"].residual.values
    M, J = claim_martingale(bundle, T, death=Cv, survival=CT)
    direct = gkw(M, S, bundle.F, check=check)
    if check:
        if not space.close(xi, direct.theta.values):
            raise InvariantError("annuity split: combined xi^F differs from the direct GKW")
        if not space.close(L, direct.residual.values):
            raise InvariantError("annuity split: combined L^F differs from the direct GKW")
        if not space.is_zero(ibp):
            raise InvariantError("annuity split: integration by parts identity fails")
    claim = Claim.annuity_claim(Cv, T)
    pm = phi_m(S, bundle, check=check)
    report = _assemble(claim, S, bundle, xi, L, M.values, J, Cv, pm, "annuity-split",
                       pay_at_term, check, {"U^C_T": U, "G(T)": GT, "Cor": cor, "C~": Ut})
    return SplitResult(U, GT, cor, Mg, parts, xi, L, direct, ibp, report)
