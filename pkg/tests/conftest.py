import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

_ACCEPTANCE_LINES = []


@pytest.fixture
def announce(request):
    """Print one PASS/FAIL line for an acceptance criterion, live and in the summary."""
    reporter = request.config.pluginmanager.getplugin("terminalreporter")

    def _announce(number, title, ok, detail):
        line = f"[criterion {number}] {'PASS' if ok else 'FAIL'} {title}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        else:
            print(line)
        return ok

    return _announce


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)
