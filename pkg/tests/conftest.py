import pytest

from affine_harmonic.groups import bs12, lamplighter, zline


@pytest.fixture(scope="session")
def g_bs12():
    return bs12()


@pytest.fixture(scope="session")
def g_zline():
    return zline()


@pytest.fixture(scope="session")
def g_lamp2():
    return lamplighter(2)
