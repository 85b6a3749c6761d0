import numpy as np
import pytest

from xxscalar.dynamics import paper_chain_spec
from xxscalar.protocol import chain_spectrum

_ACCEPTANCE = []


@pytest.fixture(scope="session")
def forty_node():
    spec = paper_chain_spec(2, 20, 0.006, (0.55, 0.817), 1.0)
    return spec, chain_spectrum(spec)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in _ACCEPTANCE:
        terminalreporter.write_line(line)
