import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from cavityspin.config import ExperimentConfig  # noqa: E402


@pytest.fixture
def config():
    return ExperimentConfig()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
