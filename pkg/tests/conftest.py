import re
from collections import defaultdict

import numpy as np
import pytest

from dhosim import SpectralModel

_CRITERION = re.compile(r"test_c(\d+)([a-z]?)_")
_outcomes: dict[int, list[tuple[str, str]]] = defaultdict(list)


@pytest.fixture(scope="session")
def narrow_bath():
    """Reservoir of the reference comparison: r = 0.1, g = 0.045, k_B T = 80 hbar omega0."""
    return SpectralModel.from_ratio(0.1, 0.045, 80.0)


@pytest.fixture(scope="session")
def time_grid():
    return np.linspace(0.0, 30.0, 600)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    m = _CRITERION.match(name)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes[int(m.group(1))].append((name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_outcomes):
        parts = _outcomes[crit]
        ok = all(outcome == "passed" for _, outcome in parts)
        failed = [n for n, outcome in parts if outcome != "passed"]
        suffix = "" if ok else "  (failing: " + ", ".join(failed) + ")"
        tr.write_line(f"criterion {crit:2d}: {'PASS' if ok else 'FAIL'}{suffix}")
