import pytest

from fqlab import FieldSpec, build_table


@pytest.fixture(scope="session")
def field2():
    return FieldSpec(2)


@pytest.fixture(scope="session")
def field3():
    return FieldSpec(3)


@pytest.fixture(scope="session")
def table2(field2):
    # degree 10 covers factorization of degree-20 inputs and the degree-10
    # prime listing used all over the suite
    return build_table(field2, 10)


@pytest.fixture(scope="session")
def table2_14(field2):
    return build_table(field2, 14)


@pytest.fixture(scope="session")
def table3(field3):
    return build_table(field3, 6)
