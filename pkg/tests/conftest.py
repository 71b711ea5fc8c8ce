import sys

import numpy as np
import pytest

from unduloid_lab.cousin import integrate_cousin
from unduloid_lab.delaunay import NecksizeParams, hemisphere_patch, immerse, profile_for


@pytest.fixture(scope="session")
def half15():
    """Upper half patch of the n = 1.5 unduloid at 400x100, three periods."""
    return immerse(profile_for(1.5), half=True, t_range=3.0, grid=(400, 100))


@pytest.fixture(scope="session")
def cousin15(half15):
    return integrate_cousin(half15)


@pytest.fixture(scope="session")
def hemi():
    return hemisphere_patch(grid=(200, 200))


@pytest.fixture(scope="session")
def hemi_cousin(hemi):
    return integrate_cousin(hemi)


@pytest.fixture(scope="session")
def full10():
    return immerse(profile_for(1.0), half=False, grid=(200, 100))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    summary = getattr(mod, "SUMMARY", None)
    if summary:
        terminalreporter.section("acceptance criteria")
        for k in sorted(summary):
            for line in summary[k]:
                terminalreporter.write_line(line)
