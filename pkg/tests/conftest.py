"""Shared pytest wiring.

The acceptance tests record one pass/fail line per criterion here; the
terminal-summary hook replays them after the run so they show up even
though pytest captures per-test stdout.
"""

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
