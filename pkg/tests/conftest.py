import pytest

from rlx.schottky import CircleDatum, SchottkyConfig


@pytest.fixture(scope="session")
def cfg2():
    """One circle at (2, 1): cyclic group, two glued circles."""
    return SchottkyConfig((CircleDatum(2.0, 1.0),))


@pytest.fixture(scope="session")
def cfg3():
    """Circles (1.2, 0.8) and (4.1, 1.4): free group on two generators."""
    return SchottkyConfig((CircleDatum(1.2, 0.8), CircleDatum(4.1, 1.4)))


@pytest.fixture(scope="session")
def cfg1():
    """No circles: the trivial group."""
    return SchottkyConfig(())
