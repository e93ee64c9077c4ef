"""Shared fixtures and the acceptance-criteria terminal summary."""

from __future__ import annotations

import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record the outcome of one numbered acceptance criterion.

    The recorded verdicts are replayed as one line per criterion in the
    terminal summary, regardless of which individual tests passed.
    """

    def record(criterion: int, passed: bool, detail: str) -> None:
        _RESULTS[int(criterion)] = (bool(passed), str(detail))

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_RESULTS):
        passed, detail = _RESULTS[k]
        word = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {k}: {word} - {detail}")
