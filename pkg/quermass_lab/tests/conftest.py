"""
Pytest configuration and shared fixtures
"""

import math
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest

# Repository root on the path so `quermass_lab` imports as a package
sys.path.insert(0, str(Path(__file__).parent.parent.parent))

from quermass_lab.bodies import Ball, CoreBall, Sausage, VPolytope


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: samples 1e5 points or more")


@pytest.fixture
def temp_dir():
    """Create a temporary directory for test files"""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


@pytest.fixture
def rng():
    """Seeded generator for test data"""
    return np.random.default_rng(12345)


@pytest.fixture
def unit_ball_3d():
    return Ball(dim=3, center=(0.0, 0.0, 0.0), radius=1.0)


@pytest.fixture
def unit_disk():
    return Ball(dim=2, center=(0.0, 0.0), radius=1.0)


@pytest.fixture
def sausage_2d():
    """Segment of length 3 plus a unit disk"""
    return Sausage(dim=2, p=(0.0, 0.0), q=(3.0, 0.0), radius=1.0)


@pytest.fixture
def sausage_3d():
    """Segment of length 2 plus a unit ball"""
    return Sausage(dim=3, p=(-1.0, 0.0, 0.0), q=(1.0, 0.0, 0.0), radius=1.0)


@pytest.fixture
def unit_square_core():
    """Unit square rounded by a unit disk"""
    return CoreBall(dim=2, core_vertices=((0, 0), (1, 0), (1, 1), (0, 1)), radius=1.0)


@pytest.fixture
def rounded_square():
    """Square of side 2 rounded by a unit disk"""
    return CoreBall(dim=2, core_vertices=((-1, -1), (1, -1), (1, 1), (-1, 1)), radius=1.0)


@pytest.fixture
def rounded_cube():
    """Unit cube rounded by a unit ball"""
    cube = tuple((float(x), float(y), float(z)) for x in (0, 1) for y in (0, 1) for z in (0, 1))
    return CoreBall(dim=3, core_vertices=cube, radius=1.0)


@pytest.fixture
def planar_square_3d():
    """Square of side 2 in the plane z = 0, rounded by a unit ball"""
    return CoreBall(dim=3, core_vertices=((-1, -1, 0), (1, -1, 0), (1, 1, 0), (-1, 1, 0)), radius=1.0)


@pytest.fixture
def unit_square_polytope():
    return VPolytope(dim=2, vertices=((0, 0), (1, 0), (1, 1), (0, 1)))


@pytest.fixture
def pi():
    return math.pi
