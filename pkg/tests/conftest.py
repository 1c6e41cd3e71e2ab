from pathlib import Path

import pytest

from mpstfl import parse_env, parse_session, parse_type

DATA = Path(__file__).parent / "data"


def load(name: str):
    text = (DATA / name).read_text()
    if name.endswith(".ses"):
        return parse_session(text)
    if name.endswith(".env"):
        return parse_env(text)
    return parse_type(text)


@pytest.fixture
def data_dir() -> Path:
    return DATA


# one-line verdicts recorded by the acceptance tests
RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
