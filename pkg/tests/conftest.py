import zlib

import numpy as np
import pytest


@pytest.fixture
def rng(request):
    # per-test deterministic stream
    seed = zlib.crc32(request.node.nodeid.encode())
    return np.random.default_rng(seed)


@pytest.fixture
def scalar_sys():
    from koopgauss import validate_system

    return validate_system([[-1.0]], [[1.0]])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_acceptance_results", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        terminalreporter.write_line(results[num])
