import pytest

from latmesh.precision.ball import PrecisionContext
from latmesh.precision.pair import ExponentPair

# criterion id -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def p12():
    return ExponentPair.integer(1, 2)


@pytest.fixture(scope="session")
def p13():
    return ExponentPair.integer(1, 3)


@pytest.fixture(scope="session")
def p23():
    return ExponentPair.integer(2, 3)


@pytest.fixture(scope="session")
def psqrt2():
    return ExponentPair.parse("1", "sqrt(2)", PrecisionContext())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        passed, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key:>4s} {'PASS' if passed else 'FAIL'}  {detail}")
