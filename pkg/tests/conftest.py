import numpy as np
import pytest

from rieszlab.coeffs import multiplicative_sieve
from rieszlab.testbeds import TestbedId, make_testbed


@pytest.fixture(scope="session")
def zeta_spec():
    return make_testbed(TestbedId("ZETA"))


@pytest.fixture(scope="session")
def zeta2_spec():
    return make_testbed(TestbedId("ZETA_SQUARED"))


@pytest.fixture(scope="session")
def eis_spec():
    return make_testbed(TestbedId("EISENSTEIN", (0j, 1j, -1j)))


@pytest.fixture(scope="session")
def rs_delta_spec():
    return make_testbed(TestbedId("RS_DELTA"))


@pytest.fixture(scope="session")
def ones_table_1e6(zeta_spec):
    return multiplicative_sieve(zeta_spec, 10**6)


@pytest.fixture(scope="session")
def zeta2_table_1e5(zeta2_spec):
    return multiplicative_sieve(zeta2_spec, 10**5)


@pytest.fixture(scope="session")
def rs_delta_table_1e4(rs_delta_spec):
    return multiplicative_sieve(rs_delta_spec, 10**4)


@pytest.fixture(scope="session")
def eis_table_1e4(eis_spec):
    return multiplicative_sieve(eis_spec, 10**4)


@pytest.fixture(scope="session")
def divisor_counts_1e5():
    """Independent divisor-count oracle: d(m) by direct multiple marking."""
    X = 10**5
    d = np.zeros(X + 1, dtype=np.int64)
    for q in range(1, X + 1):
        d[q::q] += 1
    return d
