import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    """Record one pass/fail line per acceptance criterion."""

    def report(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
