import numpy as np
import pytest

from ddimage.experiment import RunConfig, identify

ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion."""

    def _report(number: int, name: str, passed: bool, detail: str):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name} -- {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)

    return _report


@pytest.fixture(scope="session")
def exact_identification():
    """Noiseless identification from analytic derivatives with default settings."""
    return identify(RunConfig(derivatives="exact"), 0, 0.0)


@pytest.fixture(scope="session")
def exact_identification_unregularized():
    return identify(RunConfig(derivatives="exact", lambda_reg=0.0), 0, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
