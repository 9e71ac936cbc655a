"""Shared fixtures and the acceptance-summary reporting hook."""

import pytest

# one line per acceptance criterion, printed after the run so the
# pass/fail verdicts are visible even with output capture enabled
_CRITERION_LINES: list = []


def record_criterion(number: int, passed: bool, detail: str):
    _CRITERION_LINES.append(
        f"criterion {number}: {'PASS' if passed else 'FAIL'} — {detail}"
    )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for line in sorted(_CRITERION_LINES):
        terminalreporter.write_line(line)
