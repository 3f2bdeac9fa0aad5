from __future__ import annotations

import re

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_RESULTS = pytest.StashKey[dict]()
_CRITERION = re.compile(r"test_criterion_(\d+)")


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def criterion(request):
    """Record (and assert) the outcome of one acceptance criterion."""

    def record(number: int, title: str, passed: bool, detail: str = "") -> None:
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        request.config.stash[_RESULTS][number] = line
        print(line)
        assert passed, line

    return record


@pytest.hookimpl(trylast=True)
def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, {})
    for rep in terminalreporter.stats.get("failed", []) + terminalreporter.stats.get("error", []):
        m = _CRITERION.search(rep.nodeid)
        if m:
            n = int(m.group(1))
            results.setdefault(n, f"criterion {n:>2} FAIL  {rep.nodeid.split('::')[-1]}: raised before a verdict")
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
