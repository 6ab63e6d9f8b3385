import math

import pytest

import lranoise as lr


@pytest.fixture(scope="session")
def kernel():
    return lr.keys_kernel()


@pytest.fixture(scope="session")
def fk(kernel):
    return lr.build_filtered_kernel(kernel)


@pytest.fixture(scope="session")
def ac(kernel):
    return lr.build_autocorrelation(kernel)


@pytest.fixture(scope="session")
def field():
    return lr.make_sigma2_product()


@pytest.fixture(scope="session")
def x0():
    return (math.sqrt(2.0) / 4.0, math.sqrt(3.0) / 4.0)


@pytest.fixture(scope="session")
def chx():
    return (1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0))
