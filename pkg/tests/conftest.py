import numpy as np
import pytest

from abpoles.geometry import PoleConfig, crack_polylines, default_domain, disk_polygon
from abpoles.mesh import generate, split, triangulate


@pytest.fixture(scope="session")
def two_poles():
    return PoleConfig.from_lists([0.9, 0.9], [-1.0, 1.0], [0.2, 0.2])


@pytest.fixture(scope="session")
def domain():
    return default_domain()


@pytest.fixture(scope="session")
def pair_meshes(two_poles, domain):
    """eps-cut and 0-cut of one shared coarse base mesh."""
    ce = crack_polylines(two_poles, domain, 0.2)
    base = triangulate(domain, ce, 0.15, 5.0)
    return split(base, ce), split(base, crack_polylines(two_poles, domain, 0.0))


@pytest.fixture(scope="session")
def disk_mesh():
    cfg = PoleConfig.from_lists([0.5], [0.3], [0.3])
    dom = disk_polygon(128)
    c0 = crack_polylines(cfg, dom, 0.0)
    return cfg, generate(dom, c0, 0.1, 4.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


CRITERION_LINES: dict = {}


@pytest.fixture
def record_criterion():
    """Store a criterion's pass/fail line for the terminal summary, then return it."""

    def record(crit):
        CRITERION_LINES[crit.number] = crit.line()
        print(crit.line())
        return crit

    return record


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERION_LINES):
            terminalreporter.write_line(CRITERION_LINES[n])
