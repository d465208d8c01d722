"""Shared fixtures and the slow/sea-star gates"""

import os

import numpy as np
import pytest

from utils.datasets import load_sea_stars


def pytest_collection_modifyitems(config, items):
    if os.getenv("VMF_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="set VMF_RUN_SLOW=1 to run full-scale Monte-Carlo checks")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def circular_xi():
    return np.array([2.37, 0.0])


@pytest.fixture
def spherical_xi():
    return np.array([3.99, 0.0, 0.0])


@pytest.fixture
def sea_stars():
    path = os.getenv("VMF_SEA_STAR_PATH")
    if not path or not os.path.isfile(path):
        pytest.skip("sea-star data not available (set VMF_SEA_STAR_PATH)")
    return load_sea_stars(path)


@pytest.fixture
def angles_csv(tmp_path):
    """Write a list of angles as a one-column CSV and return its path"""
    def write(angles, name="angles.csv", header=False):
        path = tmp_path / name
        lines = (["theta"] if header else []) + [repr(float(a)) for a in angles]
        path.write_text("\n".join(lines) + "\n")
        return str(path)
    return write
