import pytest

from mctree.tree import MarketParams

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def market() -> MarketParams:
    return MarketParams(s0=100.0, strike=95.0, maturity=1.0, rate=0.03, sigma=0.2)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
