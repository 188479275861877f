import os

import pytest
from hypothesis import HealthCheck, settings

from ecdlab.potential import Landscape, build_maps

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=15, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def quartic121():
    return Landscape.quartic(1.0, 2.0, 1.0)


@pytest.fixture(scope="session")
def maps121(quartic121):
    return build_maps(quartic121, 1.0)


@pytest.fixture(scope="session")
def model121(quartic121, maps121):
    from ecdlab.qecd_spectral import build_spectral_model
    return build_spectral_model(quartic121, maps121, 0.05, 4096)


def tilted_quartic(tilt: float = 0.6, v: float = 1.0):
    """``(t^2-1)^2 + v + tilt (t^3/3 - t)``: minima stay at -1 (local) and +1 (global)."""
    import numpy as np

    val = lambda t: (np.asarray(t) ** 2 - 1) ** 2 + v + tilt * (np.asarray(t) ** 3 / 3 - np.asarray(t))
    d1 = lambda t: (np.asarray(t) ** 2 - 1) * (4 * np.asarray(t) + tilt)
    d2 = lambda t: 12 * np.asarray(t) ** 2 - 4 + 2 * tilt * np.asarray(t)
    return Landscape.custom(val, d1, d2, -1.0, 1.0)


@pytest.fixture(scope="session")
def tilted():
    return tilted_quartic()


ACCEPTANCE_LOG = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LOG, key=lambda s: int(s.split()[2].rstrip(":"))):
        terminalreporter.write_line(line)
