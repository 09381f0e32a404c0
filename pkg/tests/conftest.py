import pytest

_CRITERION_LINES: list[str] = []


@pytest.fixture(scope="session")
def criteria() -> list[str]:
    """Shared sink for acceptance-criterion result lines."""
    return _CRITERION_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERION_LINES:
            terminalreporter.write_line(line)
