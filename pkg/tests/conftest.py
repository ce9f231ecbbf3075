import pytest

from elkwolf.equilibria import coexistence_equilibrium
from elkwolf.model import default_parameters


@pytest.fixture
def base():
    return default_parameters()


@pytest.fixture
def xstar(base):
    return coexistence_equilibrium(base)


@pytest.fixture
def hopf_params(base):
    return base.replace(gamma=0.11, xi=0.10)
