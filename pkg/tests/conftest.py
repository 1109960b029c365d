import pytest

from ptwell.model import PotentialSpec, Rep

_CRITERIA = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion; printed again in the terminal summary."""

    def record(number, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        print(line)
        _CRITERIA.append((number, line))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_CRITERIA, key=lambda t: t[0]):
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def harmonic():
    return PotentialSpec(Rep.HARMONIC, 1.0)


@pytest.fixture(scope="session")
def cubic():
    return lambda h: PotentialSpec(Rep.H, h)
