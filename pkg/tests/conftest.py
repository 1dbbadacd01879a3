import pytest

from ricochet.core import Bullet


def make_bullets(velocities, times, first=0):
    return [Bullet(first + i, float(v), float(t)) for i, (v, t) in enumerate(zip(velocities, times))]


@pytest.fixture
def three():
    return make_bullets((1.0, 3.0, 0.5), (0, 1, 2))


@pytest.fixture
def cascade():
    return make_bullets((0.6, 0.2, 1.0, 10.0), (0, 1, 2, 2.1))


@pytest.fixture
def triple():
    return make_bullets((1.0, 1.5, 3.0), (0, 1, 2))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
