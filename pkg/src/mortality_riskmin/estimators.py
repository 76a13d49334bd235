"""scikit-learn style wrapper around the hedging routes.

``fit`` takes a scenario (or anything with ``.scenario``) as X and the
claim as y; there is no sample axis, so only the parameter handling and
the fitted-attribute conventions of the estimator API apply.
"""
from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .hedging import Claim, hedge_G, hedge_G_direct, hedge_G_predictable
from .securitization import hedge_with_securities

ROUTES = ("transfer", "direct", "predictable")


def check_scenario(X):
    sc = getattr(X, "scenario", X)
    if not hasattr(sc, "bundle") or not hasattr(sc, "S"):
        raise TypeError(f"expected a Scenario, got {type(X).__name__}")
    return sc


def check_claim(y, scenario=None):
    claim = getattr(y, "claim", y)
    if not isinstance(claim, Claim):
        raise TypeError(f"expected a Claim, got {type(y).__name__}")
    if scenario is not None and not 1 <= claim.term <= scenario.horizon:
        raise ValueError(f"claim term {claim.term} outside 1..{scenario.horizon}")
    return claim


class RiskMinimizingHedger(BaseEstimator):
    def __init__(self, route="transfer", instruments=(), degenerate="min_norm",
                 pay_at_term=False, check=True):
        self.route = route
        self.instruments = instruments
        self.degenerate = degenerate
        self.pay_at_term = pay_at_term
        self.check = check

    def fit(self, X, y):
        sc = check_scenario(X)
        claim = check_claim(y, sc)
        if self.route not in ROUTES:
            raise ValueError(f"route must be one of {ROUTES}, got {self.route!r}")
        bundle = sc.bundle
        if self.instruments:
            if self.route != "transfer":
                raise ValueError("securitized hedges are built on the transfer route")
            rep = hedge_with_securities(claim, list(self.instruments), sc.S, bundle,
                                        self.degenerate, self.pay_at_term, self.check)
        elif self.route == "transfer":
            rep = hedge_G(claim, sc.S, bundle, self.pay_at_term, self.check)
        elif self.route == "direct":
            rep = hedge_G_direct(claim, sc.S, bundle, pay_at_term=self.pay_at_term, check=self.check)
        else:
            rep = hedge_G_predictable(claim, sc.S, bundle, self.pay_at_term, self.check)
        self.report_ = rep
        self.initial_capital_ = rep.initial_capital
        self.strategy_ = [p.values for p in rep.strategy]
        self.residual_ = rep.residual.values
        self.risk0_ = rep.risk0
        self.scenario_ = sc
        return self

    def _fitted(self):
        if not hasattr(self, "report_"):
            raise NotFittedError("call fit before using the hedger")
        return self.report_

    def predict(self, X=None):
        """Portfolio value process V (shape (N+1, n))."""
        return self._fitted().value.values

    def transform(self, X=None):
        """Strategy positions, one (N+1, n) array per traded asset."""
        return [p.values for p in self._fitted().strategy]

    def score(self, X=None, y=None):
        """Negative initial risk R_0, so larger is better."""
        return -float(self._fitted().risk0)
