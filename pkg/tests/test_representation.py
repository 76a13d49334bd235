import pytest
from hypothesis import given, settings, strategies as st

from mortality_riskmin import are_orthogonal, optional_representation
from mortality_riskmin.oracle import FAMILIES, random_benefits, random_scenario
from mortality_riskmin.representation import (
    death_claim_martingale,
    predictable_claim_martingale,
    representation_martingality,
)

from conftest import all_zero, q, same


def _death_benefit(sc, fn):
    return sc.adapted_function(lambda v, t: fn(v) if t >= 1 else 0)


def test_death_claim_martingale_cb1(cb1):
    h = _death_benefit(cb1, lambda v: 1 if v.labels[0] == "u" else 0)
    M = death_claim_martingale(h, cb1.bundle, 1)
    assert M.values[0, 0] == q("1/4")


def test_predictable_claim_martingale_constant(cb1):
    h = cb1.space.zeros((2, 4)) + q(3)
    h[0] = 0
    m = predictable_claim_martingale(h, cb1.bundle, 1)
    assert all(v == q("3/2") for v in m.values.ravel())


def test_cb1_representation(cb1):
    h = _death_benefit(cb1, lambda v: 1 if v.labels[0] == "u" else 0)
    rep = optional_representation(h, cb1.bundle, 1)
    b = cb1.bundle
    expected = [1 if (p[0] == ("u",) and t == 1) else 0
                for p, t in zip(cb1.space.outcomes, b.tau.values)]
    assert same(rep.H.values[1], expected)
    assert all_zero(rep.reconstruction_residual())


def test_f_stopping_has_no_pure_mortality(cs1):
    h = _death_benefit(cs1, lambda v: 2)
    rep = optional_representation(h, cs1.bundle, 1, survival=cs1.S.values[1])
    assert all_zero(rep.pure_mortality.values)
    assert all_zero(rep.reconstruction_residual())


def test_non_adapted_benefit_rejected(cb1):
    h = cb1.space.zeros((2, 4))
    h[1] = cb1.bundle.tau.values == 1
    with pytest.raises(ValueError):
        optional_representation(h, cb1.bundle, 1)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), fam=st.sampled_from(FAMILIES))
def test_representation_components_are_orthogonal_martingales(seed, fam):
    sc = random_scenario(seed, fam)
    b = sc.bundle
    ben = random_benefits(sc, seed)
    rep = optional_representation(ben["K"], b, ben["term"], survival=ben["g"])
    assert all_zero(rep.reconstruction_residual())
    assert all(d.ok for d in representation_martingality(rep, b).values())
    assert are_orthogonal(rep.pure_mortality, rep.pure_financial + rep.correlation, b.gfilt)
