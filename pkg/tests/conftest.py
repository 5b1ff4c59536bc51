"""Collects acceptance verdicts and repeats them at the end of the run."""

ACCEPTANCE = {}


def record(number, title, ok, detail):
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE[number] = line
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
