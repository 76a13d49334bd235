from pathlib import Path

import numpy as np
import pytest

from mortality_riskmin import IndependentDeath, StoppingRule, binomial, build_space, exact

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"


def q(s):
    return exact(s)


def all_zero(arr) -> bool:
    return all(v == 0 for v in np.asarray(arr).ravel())


def same(a, b) -> bool:
    a, b = np.asarray(a), np.asarray(b)
    return a.shape == b.shape and all(x == y for x, y in zip(a.ravel(), b.ravel()))


@pytest.fixture(scope="session")
def cb1():
    """One fair step, independent fair death coin at t=1."""
    return build_space(binomial(1), IndependentDeath(["1/2"]), name="cb1")


@pytest.fixture(scope="session")
def cs1():
    """Same market, death exactly on the down move."""
    return build_space(binomial(1), StoppingRule(lambda v, t: v.labels[0] == "d"), name="cs1")


@pytest.fixture(scope="session")
def up(cb1):
    return cb1.path_function(lambda v: 1 if v.labels[0] == "u" else 0)


@pytest.fixture(scope="session")
def scenario_dir():
    return SCENARIOS


ACCEPTANCE: dict = {}


def record(criterion: int, ok: bool, detail: str):
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
