"""Acceptance criteria 1-9, exact rational arithmetic, 100 seeds per family."""
import warnings

import numpy as np
import pytest

from mortality_riskmin import (
    Claim,
    Process,
    Security,
    are_orthogonal,
    brute_force_hedge,
    compensator_identity_check,
    endowment_split,
    annuity_split,
    hat_transform,
    hedge_F,
    hedge_G,
    hedge_G_direct,
    hedge_with_securities,
    independent_endowment_price,
    is_independent,
    is_martingale,
    is_pseudo_stopping,
    optional_representation,
    phi_m,
    price_security,
    random_benefits,
    random_scenario,
    special_case_formulas,
)
from mortality_riskmin.calculus import integrate_values
from mortality_riskmin.oracle import FAMILIES
from mortality_riskmin.representation import death_leg_value
from mortality_riskmin.securitization import direct_price

from conftest import all_zero, record, same

SEEDS = range(100)
MODEL_FAMILIES = FAMILIES[:4]


@pytest.fixture(scope="module")
def cases():
    out = {}
    for fam in FAMILIES:
        rows = []
        for seed in SEEDS:
            sc = random_scenario(seed, fam)
            rows.append((seed, sc, random_benefits(sc, seed)))
        out[fam] = rows
    return out


def _claims(ben):
    T = ben["term"]
    return (Claim.endowment(ben["g"], ben["K"], T), Claim.annuity_claim(ben["C"], T))


def _random_martingale(sc, rng):
    sp = sc.space
    x = sp.array([int(v) for v in rng.integers(-5, 6, size=sp.n)])
    return Process(np.stack([sp.F.cond_exp(x, t) for t in sp.times]), sp.F)


def _fails(label, failures):
    return f"{label}; failures: {failures[:5]}" if failures else label


def test_criterion_1_representation(cases, cb1, cs1):
    failures, n = [], 0
    for fam in FAMILIES:
        for seed, sc, ben in cases[fam]:
            b = sc.bundle
            rep = optional_representation(ben["K"], b, ben["term"], survival=ben["g"], check=False)
            n += 1
            if not all_zero(rep.reconstruction_residual()):
                failures.append((fam, seed, "reconstruction"))
            elif not are_orthogonal(rep.pure_mortality, rep.pure_financial + rep.correlation, b.gfilt):
                failures.append((fam, seed, "orthogonality"))
    for sc in (cb1, cs1):
        h = sc.adapted_function(lambda v, t: 1 if t >= 1 and v.labels[0] == "u" else 0)
        rep = optional_representation(h, sc.bundle, 1, check=False)
        n += 1
        if not all_zero(rep.reconstruction_residual()):
            failures.append((sc.name, "reconstruction"))
    assert record(1, not failures, _fails(f"{n} decompositions reconstruct exactly", failures))


def test_criterion_2_hat_transform(cases):
    failures, n = [], 0
    for fam in FAMILIES:
        for seed, sc, _ in cases[fam]:
            rng = np.random.default_rng(10_000 + seed)
            for k in range(5):
                M = _random_martingale(sc, rng)
                n += 1
                if not is_martingale(hat_transform(M, sc.bundle), sc.bundle.gfilt):
                    failures.append((fam, seed, k))
    assert record(2, not failures, _fails(f"{n} hat transforms are G-martingales", failures))


def test_criterion_3_transfer_equals_direct(cases):
    failures, n = [], 0
    for fam in MODEL_FAMILIES:
        for seed, sc, ben in cases[fam]:
            b = sc.bundle
            at = b.at_risk(ben["term"])
            for claim in _claims(ben):
                r1 = hedge_G(claim, sc.S, b)
                r2 = hedge_G_direct(claim, sc.S, b)
                n += 1
                ok = (same(r1.xi.values[at], r2.xi.values[at])
                      and same(r1.residual.values, r2.residual.values)
                      and same(r1.value.values, r2.value.values)
                      and r1.risk0 == r2.risk0)
                if not ok:
                    failures.append((fam, seed, claim.kind))
    assert record(3, not failures, _fails(f"{n} claims agree on strategy, residual, value, R_0", failures))


def test_criterion_4_oracle_optimality(cases):
    failures, n, perturbed = [], 0, 0
    for fam in MODEL_FAMILIES:
        for seed, sc, ben in cases[fam]:
            b = sc.bundle
            sp = sc.space
            rng = np.random.default_rng(20_000 + seed)
            for claim in _claims(ben):
                r = hedge_G(claim, sc.S, b)
                payoff = claim.payoff(b)
                X = r.assets[0].values
                o = brute_force_hedge(payoff, [r.assets[0]], b.gfilt)
                n += 1
                if r.risk0 != o.risk:
                    failures.append((fam, seed, claim.kind, "oracle"))
                    continue
                gf = b.gfilt
                for _ in range(50):
                    bump = sp.zeros(X.shape)
                    for s in range(1, sc.horizon + 1):
                        for atom in gf[s - 1].atoms:
                            bump[s][atom] = sp.scalar(int(rng.integers(-2, 3))) / 4
                    gains = integrate_values(r.xi.values + bump, X)[-1]
                    err = payoff - r.initial_capital - gains
                    perturbed += 1
                    if sp.expectation(err * err) < o.risk:
                        failures.append((fam, seed, claim.kind, "beaten"))
                        break
    assert record(4, not failures,
                  _fails(f"{n} R_0 equal the oracle minimum; {perturbed} perturbations never lower", failures))


def test_criterion_5_transfer_identities(cases):
    failures, n = [], 0
    for fam in MODEL_FAMILIES:
        for seed, sc, ben in cases[fam]:
            b = sc.bundle
            pm = phi_m(sc.S, b, check=False)
            Gm = b.G_minus
            t_idx = np.arange(sc.horizon + 1)[:, None]
            at = b.at_risk()
            positive = np.vectorize(lambda v: v > 0, otypes=[bool])(Gm + pm.phi.values)
            n += 1
            if not all_zero(pm.identity_residual):
                failures.append((fam, seed, "identity"))
            if not positive[at & (t_idx >= 1)].all():
                failures.append((fam, seed, "inclusion"))
    for fam in FAMILIES:
        for seed, sc, ben in cases[fam]:
            b = sc.bundle
            rng = np.random.default_rng(30_000 + seed)
            inc = sc.adapted_function(lambda v, t: 0)
            for t in range(1, sc.horizon + 1):
                inc[t] = sc.space.F.cond_exp(
                    sc.space.array([int(x) for x in rng.integers(0, 4, size=sc.space.n)]), t)
            for k, V in enumerate((b.DoF.values, sc.S.values, np.cumsum(inc, axis=0))):
                if not all_zero(compensator_identity_check(V, b).values):
                    failures.append((fam, seed, "compensator", k))
    assert record(5, not failures,
                  _fails(f"{n} transfer identities and inclusions; compensator identity on 3 processes x "
                         f"{len(FAMILIES) * len(SEEDS)} scenarios", failures))


def test_criterion_6_decompositions(cases):
    failures, n = [], 0
    for fam in MODEL_FAMILIES:
        for seed, sc, ben in cases[fam]:
            b = sc.bundle
            T = ben["term"]
            F = sc.space.F
            es = endowment_split(ben["g"], T, sc.S, b)
            direct = hedge_F(ben["g"] * b.G.values[T], sc.S, T, F)
            n += 1
            if not (same(es.xi_F, direct.theta.values) and same(es.L_F, direct.residual.values)):
                failures.append((fam, seed, "endowment"))
            C = ben["C"]
            asp = annuity_split(C, T, sc.S, b)
            terminal = death_leg_value(C, b, T)[T] + C[T] * b.G.values[T]
            direct = hedge_F(terminal, sc.S, T, F)
            n += 1
            if not (same(asp.xi_F, direct.theta.values) and same(asp.L_F, direct.residual.values)):
                failures.append((fam, seed, "annuity"))
            # deterministic benefits: no correlation leg, no pure-financial leg
            det = endowment_split(2, T, sc.S, b)
            ramp = sc.adapted_function(lambda v, t: t)
            det_a = annuity_split(ramp, T, sc.S, b)
            for label, sp_ in (("det-endowment", det), ("det-annuity", det_a)):
                n += 1
                if not (all_zero(sp_.cor.values) and all_zero(sp_.parts["g"].theta.values)
                        and all_zero(sp_.parts["g"].residual.values)):
                    failures.append((fam, seed, label))
    assert record(6, not failures, _fails(f"{n} split checks exact", failures))


def test_criterion_7_special_cases(cases):
    failures, n, skipped = [], 0, 0
    for seed, sc, ben in cases["independent"]:
        b = sc.bundle
        T = ben["term"]
        assert is_independent(b)
        if b.G.values[T, 0] == 0:
            skipped += 1
            continue
        at = b.at_risk(T)
        for claim in (Claim.pure_endowment(ben["g"], T), Claim.annuity_claim(ben["C"], T)):
            closed = special_case_formulas(claim, sc.S, b, "independent")
            r = hedge_G(claim, sc.S, b)
            n += 1
            if not (same(closed.xi.values[at], r.xi.values[at])
                    and same(closed.residual.values, r.residual.values)):
                failures.append(("independent", seed, claim.kind))
    for seed, sc, ben in cases["pseudo-stopping"]:
        b = sc.bundle
        T = ben["term"]
        assert is_pseudo_stopping(b)
        at = b.at_risk(T)
        for claim in _claims(ben):
            closed = special_case_formulas(claim, sc.S, b, "pseudo-stopping")
            r = hedge_G(claim, sc.S, b)
            n += 1
            if not (same(closed.xi.values[at], r.xi.values[at])
                    and same(closed.residual.values, r.residual.values)):
                failures.append(("pseudo-stopping", seed, claim.kind))
    assert record(7, not failures,
                  _fails(f"{n} closed forms equal hedge_G ({skipped} seeds with P(tau>T)=0 excluded)",
                         failures))


def test_criterion_8_securitization(cases, cb1):
    failures, n_price, n_hedge = [], 0, 0
    for fam in MODEL_FAMILIES:
        for seed, sc, ben in cases[fam]:
            b = sc.bundle
            T = ben["term"]
            for sec in (Security.endowment(T), Security.endowment(T, ben["g"]), Security.bond(T)):
                p = price_security(sec, sc.S, b)
                n_price += 1
                if not (p.ok and same(p.price.values, direct_price(sec, b).values)):
                    failures.append((fam, seed, sec.label))
            claim = Claim.endowment(ben["g"], ben["K"], T)
            for inst in (["endowment"], ["bond"], ["endowment", "bond"]):
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    r = hedge_with_securities(claim, inst, sc.S, b)
                o = brute_force_hedge(claim.payoff(b), r.assets, b.gfilt)
                n_hedge += 1
                if r.risk0 != o.risk:
                    failures.append((fam, seed, "+".join(inst)))
            self_hedge = hedge_with_securities(Claim.pure_endowment(1, T), ["endowment"], sc.S, b)
            if not all_zero(self_hedge.residual.values):
                failures.append((fam, seed, "self-hedge"))
            if fam == "independent" and b.G.values[T, 0] > 0:
                B = direct_price(Security.bond(T), b).values
                if not all(v == B[0, 0] for v in B.ravel()):
                    failures.append((fam, seed, "bond not constant"))
                unit = direct_price(Security.endowment(T), b).values
                if not same(independent_endowment_price(1, T, b, literal=True), unit):
                    failures.append((fam, seed, "endowment price formula"))
                g_price = direct_price(Security.endowment(T, ben["g"]), b).values
                if not same(independent_endowment_price(ben["g"], T, b), g_price):
                    failures.append((fam, seed, "random-g endowment price"))
    r = hedge_with_securities(Claim.pure_endowment(1, 1), ["endowment"], cb1.S, cb1.bundle)
    if not all_zero(r.residual.values):
        failures.append(("cb1", "self-hedge"))
    assert record(8, not failures,
                  _fails(f"{n_price} prices pathwise exact; {n_hedge} securitized R_0 equal the joint oracle",
                         failures))


def test_criterion_9_cb1(cb1, up):
    b = cb1.bundle
    claim = Claim.pure_endowment(up, 1)
    r = hedge_G(claim, cb1.S, b)
    o = brute_force_hedge(claim.payoff(b), [b.stop(cb1.S)], b.gfilt)
    ok = (r.initial_capital == o.initial_capital == b.space.scalar("1/4")
          and all(v == b.space.scalar("1/4") for v in r.xi.values[1])
          and same(r.xi.values[1], o.strategy[0].values[1])
          and r.risk0 == o.risk)
    assert record(9, ok, f"H_0 = {r.initial_capital}, xi_1 = {r.xi.values[1, 0]}, "
                         f"R_0 = {r.risk0} (oracle {o.risk})")
