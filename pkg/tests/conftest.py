import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from modmetric.core import PointSpace

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def line3():
    # points 0, 1, 4 on a line
    return PointSpace.from_points(np.array([0.0, 1.0, 4.0]), ["a", "b", "c"])


@pytest.fixture
def pair16():
    return PointSpace.from_matrix([[0.0, 16.0], [16.0, 0.0]], ["x", "y"])


@pytest.fixture
def pair1():
    return PointSpace.from_matrix([[0.0, 1.0], [1.0, 0.0]], ["x", "y"])


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance_" in report.nodeid and (report.when == "call" or report.failed):
        name = report.nodeid.split("::")[-1].replace("test_acceptance_", "")
        if report.when == "call" or name not in _ACCEPTANCE:
            _ACCEPTANCE[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        num, _, label = name.partition("_")
        verdict = "PASS" if _ACCEPTANCE[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {int(num):2d} {label.replace('_', ' '):<28} {verdict}")
