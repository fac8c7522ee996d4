import pytest

from loopflow.datasets import figure1, figure1_table1


@pytest.fixture(scope="session")
def fig1():
    return figure1()


@pytest.fixture(scope="session")
def fig1_t1():
    return figure1_table1()
