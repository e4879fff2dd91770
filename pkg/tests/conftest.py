import os

import numpy as np
import pytest
from hypothesis import settings

from freqsec.core import FrService, Portfolio, SecuritySpec, SystemSnapshot, validate_portfolio

settings.register_profile("default", deadline=None, max_examples=60)
settings.register_profile("ci", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

DATA = os.path.join(os.path.dirname(__file__), "..", "data")


def four_services():
    return [FrService("FR1", 1000, 3, 0), FrService("FR2", 2000, 10, 0),
            FrService("FR3", 1000, 5, 0.5), FrService("FR4", 1000, 8, 1)]


@pytest.fixture
def spec():
    return SecuritySpec()


@pytest.fixture
def snap4():
    port = validate_portfolio(Portfolio(four_services(), [200, 980, 500, 600]))
    return SystemSnapshot(180000.0, 0.0, 1800.0, port)


def random_portfolio(rng, n_max=6, delays=True, max_delay=2.0):
    n = int(rng.integers(1, n_max + 1))
    svcs = []
    for i in range(n):
        t = float(rng.uniform(0.5, 12))
        d = float(rng.uniform(0, max_delay)) if delays and rng.random() < 0.7 else 0.0
        svcs.append(FrService(f"S{i}", 3000.0, t, d))
    alloc = rng.uniform(0, 1000, n)
    return validate_portfolio(Portfolio(svcs, alloc))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines, echoed in the terminal summary so they show up without -s
ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
