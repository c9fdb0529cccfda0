import numpy as np
import pytest

from casecohort.model import StackedDataset

_acceptance = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        _acceptance.append((report.nodeid.split("::")[-1], report.outcome, report.user_properties))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, props in _acceptance:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}")
        for key, value in props:
            terminalreporter.write_line(f"        {key}: {value}")


@pytest.fixture
def two_by_two():
    """Cell counts (d=1,x=1)=20, (d=1,x=0)=10, (d=0,x=1)=30, (d=0,x=0)=40."""
    d = [1] * 20 + [1] * 10 + [0] * 30 + [0] * 40
    x = [1] * 20 + [0] * 10 + [1] * 30 + [0] * 40
    return StackedDataset(d=np.array(d), x=np.array(x, float).reshape(-1, 1))


@pytest.fixture
def intercept_only():
    d = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0, 0])
    return StackedDataset(d=d, x=np.zeros((10, 0)))

