import numpy as np
import pytest

from optosync.model import standard_config


@pytest.fixture
def bidi():
    return standard_config("fig2_bidirectional")


@pytest.fixture
def uni():
    return standard_config("fig2_unidirectional")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
