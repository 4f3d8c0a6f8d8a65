import re

import numpy as np
import pytest

from nc_heat.algebra import model_config

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def cfg():
    return model_config(N=48, N_pad=96)


@pytest.fixture(scope="session")
def small_cfg():
    return model_config(N=24, N_pad=48)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def acceptance(request):
    """``report(k, ok, detail)`` prints and records one acceptance line."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def report(k, ok, detail):
        line = f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}"
        lines.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(lines, key=lambda s: int(re.match(r"criterion (\d+)", s).group(1))):
        terminalreporter.write_line(line)
