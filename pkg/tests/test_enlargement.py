import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mortality_riskmin import (
    Process,
    compensator_identity_check,
    hat_transform,
    is_independent,
    is_martingale,
    is_pseudo_stopping,
    survival_surface,
    validate_model,
)
from mortality_riskmin.enlargement import bundle_problems
from mortality_riskmin.oracle import FAMILIES, random_scenario

from conftest import all_zero, q, same


def test_cb1_enlargement_splits_every_atom(cb1):
    assert len(cb1.bundle.gfilt[1]) == 4
    assert len(cb1.bundle.gfilt[0]) == 1


def test_cs1_enlargement_adds_nothing(cs1):
    assert len(cs1.bundle.gfilt[1]) == len(cs1.space.F[1]) == 2


def test_cb1_azema_processes(cb1):
    b = cb1.bundle
    assert all(v == q("1/2") for v in b.G.values[1])
    assert all(v == 1 for v in b.Gtilde.values[1])
    assert all(v == q("1/2") for v in b.DoF.values[1])
    assert all(v == 1 for v in b.m.values.ravel())
    died = b.tau.values == 1
    expected = [q("1/2") if d else q("-1/2") for d in died]
    assert same(b.NG.values[1], expected)


def test_cs1_azema_processes(cs1):
    b = cs1.bundle
    up = cs1.path_function(lambda v: 1 if v.labels[0] == "u" else 0)
    assert same(b.G.values[1], up)
    assert same(b.DoF.values[1], 1 - up)
    assert all(v == 1 for v in b.m.values.ravel())
    assert all_zero(b.NG.values)
    beyond = cs1.horizon + 1
    assert list(b.R) == [1 if u == 0 else beyond for u in up]
    assert all(r == beyond for r in b.Rtilde)


def test_hat_transform_of_S_on_cb1(cb1):
    assert same(hat_transform(cb1.S, cb1.bundle).values, cb1.S.values)


def test_hat_transform_needs_martingale(cb1):
    sp = cb1.space
    drift = Process(np.stack([sp.zeros(4), sp.ones(4)]), sp.F)
    with pytest.raises(ValueError):
        hat_transform(drift, cb1.bundle)


def test_model_checks_pass_on_fixtures(cb1, cs1):
    for sc in (cb1, cs1):
        report = validate_model(sc.S, sc.bundle)
        assert report.ok
        assert len(report.items()) == 3
        assert bundle_problems(sc.bundle) == []


def test_predicates(cb1, cs1):
    assert is_independent(cb1.bundle) and is_pseudo_stopping(cb1.bundle)
    assert not is_independent(cs1.bundle) and is_pseudo_stopping(cs1.bundle)


def test_survival_surface(cb1, cs1):
    up = cs1.path_function(lambda v: 1 if v.labels[0] == "u" else 0)
    assert same(survival_surface(cs1.space, cs1.bundle.tau, 1).values[1], up)
    assert all(v == q("1/2") for v in survival_surface(cb1.space, cb1.bundle.tau, 1).values[0])
    with pytest.raises(ValueError):
        survival_surface(cb1.space, cb1.bundle.tau, 5)


def test_compensator_identity_on_cb1(cb1):
    assert all_zero(compensator_identity_check(cb1.bundle.DoF, cb1.bundle).values)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), fam=st.sampled_from(FAMILIES))
def test_azema_identities(seed, fam):
    sc = random_scenario(seed, fam)
    b = sc.bundle
    assert bundle_problems(b) == []
    G, Gt = b.G.values, b.Gtilde.values
    # Gtilde = G + optional projection of the death increment, G <= Gtilde,
    # and G_{t-1} = E[Gtilde_t | F_{t-1}]
    assert same(Gt[1:], G[1:] + np.diff(b.DoF.values, axis=0))
    assert all(x <= y for x, y in zip(G.ravel(), Gt.ravel()))
    for t in range(1, sc.horizon + 1):
        assert same(b.F.cond_exp(Gt[t], t - 1), G[t - 1])
    assert is_martingale(b.m, b.F)
    assert is_martingale(b.NG, b.gfilt)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), fam=st.sampled_from(FAMILIES[:4]))
def test_hat_transform_is_G_martingale(seed, fam):
    sc = random_scenario(seed, fam)
    b = sc.bundle
    Shat = hat_transform(sc.S, b)
    assert is_martingale(Shat, b.gfilt)
    # the correction only acts before death
    t = np.arange(sc.horizon + 1)[:, None]
    after = t > b.tau.values[None, :]
    stopped = Shat.values.copy()
    for s in range(1, sc.horizon + 1):
        stopped[s][after[s]] = Shat.values[s - 1][after[s]]
    assert same(stopped, Shat.values)
