"""Shared fixtures: acceptance-criterion reporting."""

import pytest

_ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Record one 'CRITERION: PASS/FAIL (detail)' line for the final summary."""

    def _record(criterion: str, ok: bool, detail: str = "") -> bool:
        line = f"{criterion}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
