import pytest
from hypothesis import HealthCheck, settings

from gateforge.chain import ChainConfig, normal_modes

settings.register_profile("ci", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def modes():
    """Normal modes for two to four ions, keyed by ion count."""
    return {n: normal_modes(ChainConfig(n)) for n in (2, 3, 4)}
