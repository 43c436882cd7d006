import time

import numpy as np
import pytest

_START = time.perf_counter()
FULL_SUITE_BUDGET_S = 600.0


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def report(request):
    """Record one acceptance line; repeated in the terminal summary."""
    lines = request.config._acceptance_lines

    def _report(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        lines.append(line)
        return passed

    return _report


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    elapsed = time.perf_counter() - _START
    if lines:
        terminalreporter.section("acceptance")
        for line in lines:
            terminalreporter.write_line(line)
        ok = elapsed < FULL_SUITE_BUDGET_S
        terminalreporter.write_line(
            f"criterion 8 (suite runtime): {'PASS' if ok else 'FAIL'}  "
            f"{elapsed:.1f} s < {FULL_SUITE_BUDGET_S:.0f} s")


def pytest_sessionfinish(session, exitstatus):
    if getattr(session.config, "_acceptance_lines", None):
        if time.perf_counter() - _START >= FULL_SUITE_BUDGET_S and exitstatus == 0:
            session.exitstatus = 1
