import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from uplink_isac.signal_model import SystemConfig, constellation  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def qam4():
    return constellation("qam4")


@pytest.fixture
def ref_cfg():
    return SystemConfig(mt=4, mr=8, k_users=8, snapshots=16, p_c=1.0, p_r=1.0, sigma2=0.01)


@pytest.fixture
def tiny_cfg():
    return SystemConfig(mt=1, mr=4, k_users=2, snapshots=4, p_c=1.0, p_r=1.0, sigma2=0.01)
