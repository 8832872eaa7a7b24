import pytest

_CRITERIA = []


@pytest.fixture(scope="session")
def criterion():
    """``criterion(n, ok, text)`` records and prints one PASS/FAIL line."""

    def record(n, ok, text):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {text}"
        _CRITERIA.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
