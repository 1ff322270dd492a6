import os

import pytest

os.environ['ELDERCULTURE_CONFIG'] = 'config.TestingConfig'

from elderculture.model import GrowthParams, LandEconomy, PreferenceParams, RightsParams  # noqa: E402

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')


@pytest.fixture
def prefs():
    return PreferenceParams(eta_level=0.5, beta=1.0, delta=0.2)


@pytest.fixture
def land_economy():
    return LandEconomy.from_demographics(alpha=0.5, A_m=1.0, A_e=0.025, n=0.0)


@pytest.fixture
def free_access():
    return RightsParams(phi=0.0, rho=1.0)


@pytest.fixture
def growth_params():
    return GrowthParams(n=0.0, a=0.0, alpha=0.5, beta=1.0, delta=0.2, tau_e=0.0)


@pytest.fixture
def traits_path():
    return os.path.join(FIXTURES, 'traits.csv')


@pytest.fixture
def specs_path():
    return os.path.join(FIXTURES, 'specs.json')
