import numpy as np
import pytest

from beamho.radio import BaseStation, Beam, Deployment, PropagationModel, uniform_beams


def two_station(link_beams=1, sigma=0.0, bounds=(-200.0, -200.0, 600.0, 200.0), seed=0):
    """BS 0 at the origin facing east, BS 1 at (400, 0) facing west."""
    stations = [
        BaseStation(0, (0.0, 0.0), (Beam(0.0, 65.0, 8.0, "access"),),
                    uniform_beams(link_beams, 10.0, 24.0, "link", start_deg=0.0)),
        BaseStation(1, (400.0, 0.0), (Beam(180.0, 65.0, 8.0, "access"),),
                    uniform_beams(link_beams, 10.0, 24.0, "link", start_deg=180.0)),
    ]
    prop = PropagationModel("log-distance", 3.1, 43.3, sigma, seed=seed)
    return Deployment(stations, prop, bounds)


@pytest.fixture
def simple_dep():
    return two_station(link_beams=4)


@pytest.fixture
def shadowed_dep():
    return two_station(link_beams=4, sigma=6.0, seed=11)


@pytest.fixture(scope="session")
def fig4():
    from beamho.scenarios import load_scenario

    return load_scenario("fig4")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: headline acceptance criteria (slow)")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in results:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
