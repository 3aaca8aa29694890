import pytest

from ccpnet import dataio


@pytest.fixture(scope="session")
def paper_market():
    """Default 20-dealer mirrored market with the five standard scenarios."""
    config, model, scenarios, assumptions = dataio.build_market(dataio.RunConfig())
    return config, model, scenarios, assumptions
