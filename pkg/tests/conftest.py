import pytest

from avgproc.series import gf_tables


@pytest.fixture(scope="session")
def tables_d1():
    """Exact sequence tables for d=1 at order 32, shared across modules."""
    return gf_tables(1, 32)


@pytest.fixture(scope="session")
def tables_d2():
    return gf_tables(2, 24)
