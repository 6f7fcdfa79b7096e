import pytest

from shadowlab.core_spaces import load_system


@pytest.fixture(scope="session")
def shift2():
    return load_system("builtin:full_shift2")


@pytest.fixture(scope="session")
def golden():
    return load_system("builtin:golden_mean")


@pytest.fixture(scope="session")
def tent():
    return load_system("builtin:tent")


# acceptance verdicts, filled by tests/test_acceptance.py and echoed in the terminal summary
VERDICTS: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        ok, detail = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
