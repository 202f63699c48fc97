from helpers import ACCEPTANCE, verdict_line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE, key=lambda c: (int(c.split()[0].rstrip("ab")), c)):
        ok, detail = ACCEPTANCE[crit]
        terminalreporter.write_line(verdict_line(crit, ok, detail))
