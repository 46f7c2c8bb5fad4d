import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from gyron.algebra import validate_params

settings.register_profile(
    "gyron", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("gyron")

RESONANCES = [(1, 1), (1, 2), (2, 1), (2, 3), (3, 4)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=RESONANCES, ids=lambda lm: f"{lm[0]}:{lm[1]}")
def resonance(request):
    return request.param


def params_for(l, m, hbar=0.3):
    return validate_params(l, m, hbar)


ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one pass/fail line for an acceptance criterion."""

    def record(name, ok, detail=""):
        line = f"{name}: {'PASS' if ok else 'FAIL'} {detail}".rstrip()
        ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
