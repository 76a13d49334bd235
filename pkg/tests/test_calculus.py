import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mortality_riskmin import (
    PREDICTABLE,
    MeasurabilityError,
    Process,
    angle_bracket,
    are_orthogonal,
    bracket,
    dual_projection,
    gkw,
    integrate,
    is_martingale,
)
from mortality_riskmin.linalg import rref, solve_min_norm
from mortality_riskmin.oracle import random_scenario

from conftest import all_zero, q, same


def test_integral_of_constant_position(cb1, up):
    sp = cb1.space
    H = Process(np.stack([sp.zeros(4), sp.zeros(4) + q("1/4")]), sp.F, PREDICTABLE)
    out = integrate(H, cb1.S)
    expected = [q("1/4") if u else q("-1/4") for u in up]
    assert same(out.values[1], expected)
    assert all_zero(out.values[0])


def test_integrand_must_be_predictable(cb1, up):
    sp = cb1.space
    H = Process(np.stack([sp.zeros(4), up]), sp.F)
    with pytest.raises(MeasurabilityError):
        integrate(H, cb1.S)


def test_brackets_of_cb1(cb1):
    assert all(v == 1 for v in bracket(cb1.S, cb1.S).values[1])
    assert all(v == 1 for v in angle_bracket(cb1.S, cb1.S).values[1])


def test_dual_projections_of_death_indicator(cb1, cs1):
    b = cb1.bundle
    opt = dual_projection(b.D, "optional", cb1.space.F)
    assert all(v == q("1/2") for v in opt.values[1])
    assert same(opt.values, b.DoF.values)
    pred = dual_projection(cs1.bundle.D, "predictable", cs1.space.F)
    assert all(v == q("1/2") for v in pred.values[1])
    with pytest.raises(ValueError):
        dual_projection(b.D, "sideways", cb1.space.F)


def test_gkw_complete_market(cb1, up):
    sp = cb1.space
    M = Process(np.stack([sp.zeros(4) + q("1/2"), up]), sp.F)
    parts = gkw(M, cb1.S)
    assert all(v == q("1/2") for v in parts.theta.values[1])
    assert all_zero(parts.residual.values)


def test_is_martingale(cb1):
    assert is_martingale(cb1.S)
    sp = cb1.space
    drift = Process(np.stack([sp.zeros(4), sp.ones(4)]), sp.F)
    diag = is_martingale(drift)
    assert not diag and diag.worst == 1.0


def test_gkw_rejects_non_martingale(cb1):
    sp = cb1.space
    drift = Process(np.stack([sp.zeros(4), sp.ones(4)]), sp.F)
    with pytest.raises(ValueError):
        gkw(drift, cb1.S)


def test_min_norm_solution():
    x = solve_min_norm([[1, 1], [1, 1]], [2, 2])
    assert x == [1, 1]
    _, piv = rref([[1, 2], [2, 4]])
    assert piv == [0]


def _random_martingale(sc, rng):
    sp = sc.space
    x = sp.array([int(v) for v in rng.integers(-4, 5, size=sp.n)])
    vals = np.stack([sp.F.cond_exp(x, t) for t in sp.times])
    return Process(vals, sp.F)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), fam=st.sampled_from(["independent", "unconstrained", "hazard-modulated"]))
def test_gkw_residual_is_orthogonal_martingale(seed, fam):
    sc = random_scenario(seed, fam)
    rng = np.random.default_rng(seed)
    M = _random_martingale(sc, rng)
    parts = gkw(M, sc.S)
    assert is_martingale(parts.residual)
    assert are_orthogonal(parts.residual, sc.S)
    recon = M.values[0] + integrate(parts.theta, sc.S).values + parts.residual.values
    assert same(recon, M.values)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_bracket_is_bilinear_and_compensated(seed):
    sc = random_scenario(seed, "unconstrained")
    rng = np.random.default_rng(seed)
    X, Y = _random_martingale(sc, rng), _random_martingale(sc, rng)
    lhs = bracket(X + Y, X + Y).values
    rhs = bracket(X, X).values + 2 * bracket(X, Y).values + bracket(Y, Y).values
    assert same(lhs, rhs)
    gap = bracket(X, Y) - angle_bracket(X, Y)
    assert is_martingale(gap, sc.space.F)
