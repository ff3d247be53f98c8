import pytest

from platoonflow import SimParams, run


@pytest.fixture(scope="session")
def params():
    return SimParams()


@pytest.fixture(scope="session")
def short_run():
    """One seeded 40 s open-highway run shared by engine-level tests."""
    return run(SimParams(duration=40.0, seed=1))
