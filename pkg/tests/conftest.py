import pytest
from hypothesis import settings

# First calls pay numba compilation, so per-example deadlines are meaningless.
settings.register_profile("treewire", deadline=None)
settings.load_profile("treewire")

# Per-criterion outcome lines collected by tests/test_acceptance.py.
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report():
    def record(criterion: str, passed: bool, detail: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
