import pytest
from hypothesis import HealthCheck, settings

from polyprog.sieve import build_prime_table

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def table():
    return build_prime_table(200_000)
