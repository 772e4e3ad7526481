import pytest

from calab import counter
from calab.cli import plain_alphabet

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def machine():
    return counter.counter_machine()


@pytest.fixture(scope="session")
def soup():
    return counter.tape_soup()


@pytest.fixture(scope="session")
def alpha2():
    return plain_alphabet(2)


@pytest.fixture(scope="session")
def alpha3():
    return plain_alphabet(3)


def record_criterion(num, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] acceptance criterion {num}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
