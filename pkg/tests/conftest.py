import numpy as np
import pytest

from fstpricer import CGMY, GBM, VG, Kou, MarketTerms, Merton

# one representative parameter set per family
FAMILY_MODELS = {
    "gbm": GBM(sigma=0.2),
    "merton": Merton(sigma=0.1, lam=1.0, muJ=-0.1, sigmaJ=0.2),
    "kou": Kou(sigma=0.15, lam=0.1, p=0.3445, eta1=3.0465, eta2=3.0775),
    "vg": VG(sigmaVG=0.12, nu=0.2, theta=-0.14),
    "cgmy": CGMY(C=1.0, G=5.0, M=5.0, Y=0.5),
}


@pytest.fixture
def atm_terms():
    return MarketTerms(S0=100.0, r=0.05, q=0.0, T=1.0)


@pytest.fixture(params=sorted(FAMILY_MODELS))
def family_model(request):
    return FAMILY_MODELS[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# --- acceptance gate plumbing ---------------------------------------------

import time

SESSION_START = time.perf_counter()
ACCEPTANCE_LINES = []


def pytest_collection_modifyitems(session, config, items):
    # the wall-clock criterion must run after everything else
    last = [it for it in items if it.get_closest_marker("runs_last")]
    items[:] = [it for it in items if it not in last] + last


def pytest_configure(config):
    config.addinivalue_line("markers", "runs_last: run after every other test")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
