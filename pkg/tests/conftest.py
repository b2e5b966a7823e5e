"""Shared fixtures: bundled scenarios and their trajectories, built once."""

from functools import lru_cache

import pytest

from kerrfaraday.geodesic import integrate
from kerrfaraday.scenario import bundled, load


@lru_cache(maxsize=None)
def scenario(name):
    return load(bundled()[name])


@lru_cache(maxsize=None)
def trajectory(name):
    sc = scenario(name)
    res = sc.resolved()
    return integrate(sc.initial, sc.conserved, sc.params, sc.s_max, sc.tol, res["r_escape"], res["eps_horizon"])


@pytest.fixture(scope="session")
def get_scenario():
    return scenario


@pytest.fixture(scope="session")
def get_trajectory():
    return trajectory


# --- acceptance summary ----------------------------------------------------

CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    rep = outcome.get_result()
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        CRITERIA[number] = (title, rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(CRITERIA):
        title, ok = CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {title}")
