import pytest

from doublephase.constants import ConstantsTable, first_eigenvalue_p


@pytest.fixture(scope="session")
def lambda1_p2_n5():
    return first_eigenvalue_p(2.0, 5, 1.0)


@pytest.fixture(scope="session")
def table_p2_q25_n3():
    return ConstantsTable.compute(2.0, 2.5, 3, 1.0)


@pytest.fixture(scope="session")
def table_p2_q22_n5():
    return ConstantsTable.compute(2.0, 2.2, 5, 1.0)
