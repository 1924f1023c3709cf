import pytest
from hypothesis import HealthCheck, settings

from fmmlab.grid import generate_scenario

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=200,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def uniform51():
    return generate_scenario("uniform", {"nx": 51, "ny": 51}, seed=0)


@pytest.fixture(scope="session")
def paper_like():
    return generate_scenario("paper-like", {}, seed=7)
