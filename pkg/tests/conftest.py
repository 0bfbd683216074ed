"""Shared test plumbing: the acceptance-criteria result board.

Acceptance tests call record_criterion() once each; the terminal summary
hook prints one PASS/FAIL line per criterion after the normal pytest
output, where capture cannot swallow it.
"""

_BOARD = {}


def record_criterion(number: int, passed: bool, detail: str):
    _BOARD[number] = (passed, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _BOARD:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_BOARD):
        passed, detail = _BOARD[number]
        word = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {word}  {detail}")
