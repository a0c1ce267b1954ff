"""
Shared pytest fixtures. Puts backend/ on sys.path like the scripts at the repo root.
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'backend'))

import numpy as np
import pytest

from app.core.config import get_settings
from app.dynamics.schedule import CoefficientSchedule, InversePowerTikhonov, PowerLawScaling, ZeroTikhonov
from app.dynamics.system import PhaseVector
from app.problems.builtin import kkt_example, toy_problem

collect_ignore = ["examples", "out"]


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the full-horizon experiment tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-horizon integration, several minutes each")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def toy():
    return toy_problem()


@pytest.fixture
def kkt():
    return kkt_example()


@pytest.fixture
def ihdtr_schedule():
    """alpha=3.1, gamma=1, beta=-0.5, xi = 1, eps = 1/t^1.5"""
    return CoefficientSchedule(alpha=3.1, gamma=1.0, beta_shift=-0.5,
                               xi=PowerLawScaling(1.0, 0.0), eps=InversePowerTikhonov(1.0, 1.5))


@pytest.fixture
def ihd_schedule():
    return CoefficientSchedule(alpha=3.1, gamma=1.0, beta_shift=-0.5,
                               xi=PowerLawScaling(1.0, 0.0), eps=ZeroTikhonov())


@pytest.fixture
def exp1_state():
    return PhaseVector(np.array([1.0, -1.0, -1.0]), np.array([1.0]),
                       np.array([-1.0, 1.0, 1.0]), np.array([-1.0]))


@pytest.fixture
def out_dir(tmp_path, monkeypatch):
    """Fresh output directory with PD_FLOW_OUT cleared"""
    monkeypatch.delenv("PD_FLOW_OUT", raising=False)
    get_settings.cache_clear()
    yield tmp_path / "out"
    get_settings.cache_clear()
