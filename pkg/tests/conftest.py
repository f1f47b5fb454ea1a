import json
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from hypocone.frame_model import elliptic_frame, grushin_frame, torus_grushin_frame
from hypocone.lie_core import build_free_nilpotent

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FROZEN = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())


def frac(s):
    return Fraction(s)


@pytest.fixture(scope="session")
def frozen():
    return FROZEN


@pytest.fixture(scope="session")
def g22():
    return build_free_nilpotent(2, 2)


@pytest.fixture(scope="session")
def g23():
    return build_free_nilpotent(2, 3)


@pytest.fixture(scope="session")
def grushin():
    return grushin_frame()


@pytest.fixture(scope="session")
def torus():
    return torus_grushin_frame()


@pytest.fixture(scope="session")
def elliptic():
    return elliptic_frame()


# -- acceptance summary -----------------------------------------------------------------

_ACCEPTANCE: dict[int, tuple[str, str, float]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    number, title = mark.args
    _ACCEPTANCE[number] = (title, "PASS" if rep.passed else "FAIL", rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, status, dur = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d} {status}  ({dur:6.2f} s)  {title}")
