import numpy as np
import pytest

import _report


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


def pytest_terminal_summary(terminalreporter):
    if _report.LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(_report.LINES):
            terminalreporter.write_line(_report.LINES[key])
