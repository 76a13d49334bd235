import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mortality_riskmin import (
    Claim,
    HazardDeath,
    ModelAssumptionError,
    annuity_split,
    binomial,
    build_space,
    endowment_split,
    hedge_F,
    hedge_G,
    hedge_G_direct,
    hedge_G_predictable,
    is_martingale,
    phi_m,
    special_case_formulas,
    value_closed_form,
)
from mortality_riskmin.oracle import random_benefits, random_scenario

from conftest import all_zero, q, same


@pytest.fixture(scope="module")
def cb1_endowment(cb1, up):
    return Claim.pure_endowment(up, 1)


def test_cb1_pure_endowment(cb1, cb1_endowment):
    r = hedge_G(cb1_endowment, cb1.S, cb1.bundle)
    assert r.initial_capital == q("1/4")
    assert all(v == q("1/4") for v in r.xi.values[1])
    assert r.risk0 == q("1/8")
    assert all_zero(r.reconstruction_residual())


def test_cb1_routes_agree(cb1, cb1_endowment):
    a = hedge_G(cb1_endowment, cb1.S, cb1.bundle)
    b = hedge_G_direct(cb1_endowment, cb1.S, cb1.bundle)
    assert same(a.xi.values, b.xi.values)
    assert same(a.residual.values, b.residual.values)
    assert a.risk0 == b.risk0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), fam=st.sampled_from(["independent", "f-stopping", "hazard-modulated"]))
def test_predictable_route_matches_transfer(seed, fam):
    sc = random_scenario(seed, fam)
    b = sc.bundle
    T = random_benefits(sc, seed)["term"]
    sp = sc.space
    # benefit known one step ahead: the stock price at the previous date
    h = sp.zeros((sc.horizon + 1, sp.n))
    h[1:] = sc.S.values[:-1]
    claim = Claim.term_insurance(h, T)
    a = hedge_G_predictable(claim, sc.S, b)
    c = hedge_G(claim, sc.S, b)
    at = b.at_risk(T)
    assert same(a.xi.values[at], c.xi.values[at])
    assert same(a.residual.values, c.residual.values)
    assert a.risk0 == c.risk0
    with pytest.raises(ValueError):
        hedge_G_predictable(Claim.pure_endowment(1, T), sc.S, b)


def test_cb1_value_closed_form(cb1, cb1_endowment):
    r = hedge_G(cb1_endowment, cb1.S, cb1.bundle)
    assert same(value_closed_form(cb1_endowment, cb1.bundle), r.value.values)


def test_hedge_F_complete_market(cb1, up):
    parts = hedge_F(up, cb1.S, 1, cb1.space.F)
    assert all(v == q("1/2") for v in parts.theta.values[1])


def test_phi_vanishes_for_pseudo_stopping(cb1, cs1):
    for sc in (cb1, cs1):
        pm = phi_m(sc.S, sc.bundle)
        assert all_zero(pm.phi.values) and all_zero(pm.Lm.values) and all_zero(pm.U.values)


def test_endowment_split_cb1(cb1, up):
    split = endowment_split(up, 1, cb1.S, cb1.bundle)
    assert all_zero(split.cor.values)
    assert all(v == q("1/4") for v in split.xi_F[1])
    assert same(split.xi_F, split.direct.theta.values)


def test_special_cases_on_fixtures(cb1, cs1, cb1_endowment):
    ind = special_case_formulas(cb1_endowment, cb1.S, cb1.bundle, "independent")
    assert same(ind.xi.values, hedge_G(cb1_endowment, cb1.S, cb1.bundle).xi.values)
    claim = Claim.pure_endowment(cs1.S.values[1], 1)
    ps = special_case_formulas(claim, cs1.S, cs1.bundle, "pseudo-stopping")
    direct = hedge_G(claim, cs1.S, cs1.bundle)
    at = cs1.bundle.at_risk(1)
    assert same(ps.xi.values[at], direct.xi.values[at])
    with pytest.raises(ValueError):
        special_case_formulas(claim, cs1.S, cs1.bundle, "independent")


def test_model_violation_raises():
    sc = build_space(binomial(2), HazardDeath(
        lambda v, t: "1/2" if t < 2 and v.labels[t] == "u" else "1/4"))
    with pytest.raises(ModelAssumptionError):
        hedge_G(Claim.pure_endowment(1, 2), sc.S, sc.bundle)
    # S stopped at death is then no G-martingale, which the direct route rejects
    with pytest.raises(ValueError):
        hedge_G_direct(Claim.pure_endowment(1, 2), sc.S, sc.bundle)


def test_claim_validation(cb1):
    with pytest.raises(ValueError):
        Claim.annuity_claim(np.stack([cb1.space.ones(4), cb1.space.ones(4)]), 1).legs(cb1.bundle)
    with pytest.raises(ValueError):
        hedge_G(Claim.pure_endowment(1, 3), cb1.S, cb1.bundle)


def test_pay_at_term_keeps_strategy(cb1, cb1_endowment):
    a = hedge_G(cb1_endowment, cb1.S, cb1.bundle)
    b = hedge_G(cb1_endowment, cb1.S, cb1.bundle, pay_at_term=True)
    assert same(a.xi.values, b.xi.values)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), fam=st.sampled_from(["independent", "f-stopping", "hazard-modulated"]))
def test_cost_is_martingale_and_orthogonal(seed, fam):
    sc = random_scenario(seed, fam)
    b = sc.bundle
    ben = random_benefits(sc, seed)
    r = hedge_G(Claim.endowment(ben["g"], ben["K"], ben["term"]), sc.S, b)
    assert is_martingale(r.residual, b.gfilt)
    assert is_martingale(r.claim_value, b.gfilt)
    assert all_zero(r.reconstruction_residual())
    assert r.risk0 >= 0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), fam=st.sampled_from(["independent", "pseudo-stopping", "hazard-modulated"]))
def test_deterministic_benefit_has_no_correlation_leg(seed, fam):
    sc = random_scenario(seed, fam)
    b = sc.bundle
    T = random_benefits(sc, seed)["term"]
    split = endowment_split(3, T, sc.S, b)
    assert all_zero(split.parts["g"].theta.values)
    assert all_zero(split.parts["g"].residual.values)
    C = sc.space.zeros((sc.horizon + 1, sc.space.n))
    for t in range(1, sc.horizon + 1):
        C[t] = C[t - 1] + 1
    asplit = annuity_split(C, T, sc.S, b)
    assert all_zero(asplit.parts["g"].theta.values)
