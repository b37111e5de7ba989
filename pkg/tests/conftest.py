import pytest

from nlmassari.domain import RegionSpec, build_grid


@pytest.fixture(scope="session")
def omega():
    return RegionSpec.interval(-1.0, 1.0)


@pytest.fixture(scope="session")
def half_line():
    return RegionSpec.interval(0.0, float("inf"))


@pytest.fixture(scope="session")
def grid_1d(omega):
    return build_grid(omega, 0.01, 4.0)


ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail):
    """Store one acceptance line and return ``passed`` for the caller to assert."""
    line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
