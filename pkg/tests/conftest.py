from __future__ import annotations

from fractions import Fraction

import pytest

from fora_sim.analysis.hardgen import aon_stationary, general_tight
from fora_sim.model import Instance

ACCEPTANCE: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None and (report.when == "call" or report.outcome != "passed"):
        n, title = mark.args
        entry = ACCEPTANCE.setdefault(n, {"title": title, "ok": True, "tests": 0})
        entry["tests"] += report.when == "call"
        if report.outcome == "failed" or report.skipped:
            entry["ok"] = False
    return report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        e = ACCEPTANCE[n]
        status = "PASS" if e["ok"] and e["tests"] else "FAIL"
        terminalreporter.write_line(f"{status} criterion {n:2d}: {e['title']}")


@pytest.fixture
def pair3() -> Instance:
    """One group, K=4, T=2, a request of 3 units in both slots for sure."""
    return aon_stationary(Fraction(1, 4))


@pytest.fixture
def late_top() -> Instance:
    """general-tight with beta=(0.5, 1), rho=1, eps=0.1, T=4."""
    return general_tight([Fraction(1, 2), 1], 1, Fraction(1, 10), 4)


@pytest.fixture
def pathology() -> Instance:
    """K=5, T=2: group 1 asks 1 unit in slot 1 for sure, group 2 asks 4 units in slot 2 w.p. 1/4."""
    return Instance.create(5, 2, 2, [1, 1], [(0, 0, 1, 1), (1, 1, 4, Fraction(1, 4))],
                           kind="time_varying")
