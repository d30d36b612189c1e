import numpy as np
import pytest

from qalloc.datasets import fixture_model
from qalloc.portfolio import prepare


@pytest.fixture(scope="session")
def model333():
    return fixture_model((3, 3, 3))


@pytest.fixture(scope="session")
def prepared333(model333):
    return prepare(model333)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
