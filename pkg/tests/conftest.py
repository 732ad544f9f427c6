import sys
from pathlib import Path

import pytest

from ringhopf.bifurcation import CALIBRATED_PSI, branch_from_center, hopf_scan_releq
from ringhopf.model import case_study_params

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def p():
    """Case-study parameters at the calibrated coupling phase."""
    return case_study_params(CALIBRATED_PSI)


@pytest.fixture(scope="session")
def branch(p):
    """``branch(l, alpha_max)``: cached rotating-wave branch of twist ``l``."""
    cache = {}

    def get(l, alpha_max=0.082):
        if (l, alpha_max) not in cache:
            cache[l, alpha_max] = branch_from_center(p, l, alpha_max)
        return cache[l, alpha_max]
    return get


@pytest.fixture(scope="session")
def scan(p, branch):
    """``scan(l)``: cached ``(events, predictions)`` along the twist-``l`` branch."""
    cache = {}

    def get(l):
        if l not in cache:
            cache[l] = hopf_scan_releq(p, branch(l))
        return cache[l]
    return get


@pytest.fixture
def criterion(request):
    """Record ``(passed, detail)`` for an acceptance criterion; summarized at the end of the run."""
    store = request.config.stash.setdefault(CRITERIA, {})

    def record(number: int, passed: bool, detail: str = ""):
        store[number] = (passed, detail)
        line = f"CRITERION {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(CRITERIA, {})
    if not store:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(store):
        passed, detail = store[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
