import pytest

from construct_forge.model_spec import builtin_model


@pytest.fixture(scope="session")
def study1():
    return builtin_model("study1")


@pytest.fixture(scope="session")
def study2():
    return builtin_model("study2")


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
