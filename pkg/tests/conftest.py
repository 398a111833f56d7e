import math

import pytest

from kjpa import device
from kjpa.potential import OperatingPoint

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="session")
def fitted():
    return device.fitted_device()


@pytest.fixture(scope="session")
def designed():
    return device.designed_device()


@pytest.fixture(scope="session")
def face_op() -> OperatingPoint:
    """Operating point at the published face values, zero thermal occupation."""
    return device.operating_point()


def rel_err(value, target):
    return abs(value - target) / abs(target)
