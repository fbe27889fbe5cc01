import pytest

VERDICTS = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion, then assert on it."""
    def record(number, title, ok, detail):
        VERDICTS.append((number, title, bool(ok), detail))
        print(f"{'PASS' if ok else 'FAIL'} [{number}] {title}: {detail}")
        assert ok, f"criterion {number} ({title}) not met: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(VERDICTS):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} [{number:>2}] {title}: {detail}")
