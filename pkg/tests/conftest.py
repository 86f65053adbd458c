import pytest

from neubox.potential import Potential


@pytest.fixture
def soft_sphere():
    return Potential("soft-sphere", V0=1.0, R0=1.0, kappa=1.0)
