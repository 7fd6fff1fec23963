import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# (criterion, passed, detail) lines collected by the acceptance tests
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance_line():
    def record(name: str, passed: bool, detail: str = "") -> None:
        ACCEPTANCE_LINES.append((name, bool(passed), detail))
        print(f"{'PASS' if passed else 'FAIL'} {name} {detail}".rstrip())

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}".rstrip())
