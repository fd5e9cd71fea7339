import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one status line per acceptance criterion after the run."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "STATUS_LINES", None)
    if not lines:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
