import itertools
import os

import pytest

from tscast.fixtures import gen_fixture
from tscast.packet import resync

# Distinct group/port per test so concurrent or lingering sockets never collide.
_ports = itertools.count(20000 + (os.getpid() % 2000) * 10)


@pytest.fixture
def loopback_endpoint():
    from tscast.net import validate_endpoint

    port = next(_ports)
    return validate_endpoint(f"239.77.{port % 250}.{port % 200 + 1}", port, "127.0.0.1")


@pytest.fixture(scope="session")
def two_program_bytes():
    return gen_fixture(2, 2, 4_000_000, seed=7)


@pytest.fixture(scope="session")
def two_program_packets(two_program_bytes):
    return resync(two_program_bytes).packets


# Acceptance verdicts, filled by test_acceptance.py and echoed after the run.
ACCEPTANCE_RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[number])
