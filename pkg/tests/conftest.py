import pytest
from hypothesis import HealthCheck, settings

from blochlab.verify import fixture

settings.register_profile(
    "default", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def M0():
    return fixture("M0")


@pytest.fixture(scope="session")
def M1():
    return fixture("M1")


@pytest.fixture(scope="session")
def M2():
    return fixture("M2")


@pytest.fixture(scope="session")
def M3():
    return fixture("M3")


@pytest.fixture(scope="session")
def M4():
    return fixture("M4")


# filled by test_acceptance.py; echoed after the run so the lines show without -s
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
