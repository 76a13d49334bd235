import json

import pytest

from mortality_riskmin import Expression, hedge_G, load_scenario_file, parse_scenario_text
from mortality_riskmin.scenario_io import (
    ScenarioFileError,
    dump_yaml,
    explicit_document,
    parse_scenario,
    process_rows,
    rows_to_csv,
    rows_to_json,
)

from conftest import q, same

CB1_TEXT = """
version: 1
market: {family: binomial, horizon: 1}
death: {family: independent, probs: [1/2]}
claim: {term: 1, survival: "move == 'u'"}
"""


def test_expression_arithmetic_is_exact():
    e = Expression("max(S - 1/3, 0) + indicator(move == 'u')")
    assert e({"S": q(1), "move": "u"}) == q("5/3")
    assert e.names == {"S", "move"}
    assert Expression("1 if t < 2 else 0")({"t": q(3)}) == 0


@pytest.mark.parametrize("text", ["__import__('os')", "S.real", "[1, 2]", "lambda: 1", "f(1)"])
def test_expression_rejects_unsafe_syntax(text):
    with pytest.raises(ValueError):
        Expression(text)


def test_expression_reports_unknown_symbols():
    with pytest.raises(NameError):
        Expression("Z + 1")({"S": q(1)})


def test_cb1_text_builds_the_fixture(cb1):
    spec = parse_scenario_text(CB1_TEXT)
    sc = spec.scenario
    assert sc.space.outcomes == cb1.space.outcomes
    r = hedge_G(spec.claim, sc.S, sc.bundle)
    assert r.initial_capital == q("1/4") and r.risk0 == q("1/8")


def test_float_mode_override():
    spec = parse_scenario_text(CB1_TEXT, mode="float")
    assert not spec.scenario.space.exact
    r = hedge_G(spec.claim, spec.scenario.S, spec.bundle)
    assert abs(r.risk0 - 0.125) < 1e-12


@pytest.mark.parametrize("patch, where, line", [
    ("market: {family: binomial, horizon: 1}", "market.family", None),
    ("death: {family: independent, probs: [3/2]}", "death", 4),
    ("claim: {term: 5, survival: \"1\"}", "claim", 5),
])
def test_errors_name_field_and_line(patch, where, line):
    key = patch.split(":")[0]
    lines = [ln if not ln.startswith(key + ":") else patch for ln in CB1_TEXT.splitlines()]
    if where == "market.family":
        lines = [ln.replace("binomial", "lattice") for ln in lines]
    with pytest.raises(ScenarioFileError) as err:
        parse_scenario_text("\n".join(lines))
    assert err.value.where.startswith(where.split(".")[0])
    if line:
        assert err.value.line == line


def test_yaml_syntax_error_has_line():
    with pytest.raises(ScenarioFileError) as err:
        parse_scenario_text("version: 1\nmarket: [\n")
    assert err.value.line is not None


def test_unknown_section_and_version():
    with pytest.raises(ScenarioFileError):
        parse_scenario({"version": 2, "market": {}, "death": {}})
    with pytest.raises(ScenarioFileError):
        parse_scenario({"version": 1, "market": {}, "death": {}, "extras": 1})


def test_shipped_scenarios_load(scenario_dir):
    for path in sorted(scenario_dir.glob("*.yaml")):
        spec = load_scenario_file(path)
        assert spec.claim is not None


def test_explicit_round_trip_is_exact(scenario_dir):
    spec = load_scenario_file(scenario_dir / "correlated.yaml")
    again = parse_scenario_text(dump_yaml(explicit_document(spec)))
    a, b = spec.scenario, again.scenario
    assert a.space.outcomes == b.space.outcomes
    assert same(a.space.weights, b.space.weights)
    ra = hedge_G(spec.claim, a.S, a.bundle)
    rb = hedge_G(again.claim, b.S, b.bundle)
    assert same(ra.xi.values, rb.xi.values) and ra.risk0 == rb.risk0 == q("65/384")
    assert again.instruments == ["endowment", "bond"]


def test_row_formats(cb1):
    rows = process_rows("G", cb1.bundle.G.values, cb1, cb1.bundle.gfilt)
    text = rows_to_csv(rows)
    assert text.splitlines()[0] == "process,t,atom,value,exact"
    assert "G,1,u|alive,0.5,1" in text
    doc = json.loads(rows_to_json(rows, {"R_0": q("1/8")}))
    assert doc["R_0"] == "1/8"
    assert {r["value"] for r in doc["rows"] if r["t"] == 1} == {"1/2"}
