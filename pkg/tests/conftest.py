import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for euler_oracle

import acceptance_report
from tdesim.core import DEFAULT_PARAMS, TdeParams


@pytest.fixture
def params() -> TdeParams:
    return DEFAULT_PARAMS


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_report.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_report.LINES:
            terminalreporter.write_line(line)
