"""Shared pytest wiring.

The cross-component test records its pass/fail line here; the
terminal-summary hook replays it after the run so it shows up even
though pytest captures per-test stdout.
"""

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
