import report


def pytest_terminal_summary(terminalreporter):
    if not report.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(report.LINES):
        terminalreporter.write_line(report.LINES[key])
