import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mkdv_ist.direct_scattering import PotentialSample

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def kink():
    return PotentialSample.kink(L=20.0, h=0.01)


@pytest.fixture(scope="session")
def bumped():
    """tanh(x) + 0.1 sech^2(x): one zero at z = i and a small reflection coefficient."""
    return PotentialSample.perturbed_kink(0.1, 0.0, L=20.0, h=0.01)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


_ACCEPTANCE: dict = {}


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def _report(number: int, title: str, passed: bool, detail: str):
        line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {title} [{detail}]"
        _ACCEPTANCE[number] = line
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[k])
