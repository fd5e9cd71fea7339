import sys

import pytest

from seq2count import build_model


@pytest.fixture(scope="session")
def base_model():
    """Read-only model for inference tests; never train this one."""
    return build_model(seed=11)


@pytest.fixture()
def fresh_model():
    return build_model(seed=7)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    module = sys.modules.get("test_adapter_acceptance")
    lines = getattr(module, "STATUS_LINES", None)
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
