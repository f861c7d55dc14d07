import pytest

from iemi_sim.engine import run_scenario
from iemi_sim.fixtures import load_fixture


@pytest.fixture(scope="session")
def cv1():
    return load_fixture("CV-1")


@pytest.fixture(scope="session")
def cv1_result(cv1):
    return run_scenario(cv1)


@pytest.fixture(scope="session")
def gd1_result():
    return run_scenario(load_fixture("GD-1"))
