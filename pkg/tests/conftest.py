import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "slow: long-running acceptance experiments")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
