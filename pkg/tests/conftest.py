import numpy as np
import pytest

from convexfold.domains import disk, parallelogram, pentagon, rectangle31, square
from convexfold.solver import Reaction, solve


@pytest.fixture(scope="session")
def unit_square():
    return square()


@pytest.fixture(scope="session")
def shear_parallelogram():
    return parallelogram()


@pytest.fixture(scope="session")
def disk64():
    return disk()


@pytest.fixture(scope="session")
def rect31():
    return rectangle31()


@pytest.fixture(scope="session")
def pentagon_domain():
    return pentagon()


# solved fields reused across analysis and acceptance tests


@pytest.fixture(scope="session")
def disk_torsion_fields(disk64):
    return {p: solve(disk64, Reaction(p=p), 0.02) for p in (1.5, 2.0, 3.0)}


@pytest.fixture(scope="session")
def square_torsion(unit_square):
    return solve(unit_square, Reaction(p=2.0), 0.02)


@pytest.fixture(scope="session")
def rect_torsion(rect31):
    return solve(rect31, Reaction(p=2.0), 0.02)
