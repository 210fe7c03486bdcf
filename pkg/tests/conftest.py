import pytest

from privchain.randomness import SeededRandom
from privchain.zkrp import zkrp_setup
from support import build_world


@pytest.fixture(scope="session")
def keys():
    return zkrp_setup(10, 8, b"test-admin")


@pytest.fixture(scope="session")
def world(keys):
    return build_world(keys)


@pytest.fixture
def rng(request):
    return SeededRandom(request.node.nodeid)


# acceptance lines are collected here and echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
