import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from mortality_riskmin import Claim, RiskMinimizingHedger

from conftest import q, same


def test_fit_exposes_hedge(cb1, up):
    est = RiskMinimizingHedger().fit(cb1, Claim.pure_endowment(up, 1))
    assert est.initial_capital_ == q("1/4")
    assert est.risk0_ == q("1/8")
    assert est.score() == -0.125
    assert same(est.predict(), est.report_.value.values)
    assert len(est.transform()) == 1


def test_routes_and_securities(cb1, up):
    claim = Claim.pure_endowment(up, 1)
    direct = RiskMinimizingHedger(route="direct").fit(cb1, claim)
    assert direct.risk0_ == q("1/8")
    sec = RiskMinimizingHedger(instruments=("endowment",)).fit(cb1, claim)
    assert sec.risk0_ == q("1/16") and len(sec.transform()) == 2


def test_params_and_clone():
    est = RiskMinimizingHedger(route="direct", degenerate="zero")
    assert clone(est).get_params()["degenerate"] == "zero"
    with pytest.raises(NotFittedError):
        est.predict()


def test_bad_inputs(cb1, up):
    with pytest.raises(ValueError):
        RiskMinimizingHedger(route="nope").fit(cb1, Claim.pure_endowment(up, 1))
    with pytest.raises(TypeError):
        RiskMinimizingHedger().fit("cb1", Claim.pure_endowment(up, 1))
    with pytest.raises(TypeError):
        RiskMinimizingHedger().fit(cb1, up)
    with pytest.raises(ValueError):
        RiskMinimizingHedger(route="direct", instruments=("bond",)).fit(cb1, Claim.pure_endowment(up, 1))
