"""Shared pytest hooks: collects acceptance verdict lines and prints them
as a dedicated section in the terminal summary (outside output capture)."""

ACCEPTANCE_VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)
