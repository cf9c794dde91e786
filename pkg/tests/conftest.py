import numpy as np
import pytest

from semifield_forge.config import BOUND_ENV_VAR, get_settings
from semifield_forge.constructions import choose_beta_bar
from semifield_forge.families import BHBParams, LMPTBParams, bhb, lmptb
from semifield_forge.field_tower import TowerParams, make_ctx


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    monkeypatch.delenv(BOUND_ENV_VAR, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture(scope="session")
def ctx33():
    return make_ctx(TowerParams(p=3, ell=3))


@pytest.fixture(scope="session")
def ctx53():
    return make_ctx(TowerParams(p=5, ell=3))


@pytest.fixture(scope="session")
def ctx35():
    return make_ctx(TowerParams(p=3, ell=5))


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture(scope="session")
def lmptb33(ctx33):
    return lmptb(ctx33, LMPTBParams.build(ctx33))


@pytest.fixture(scope="session")
def bhb33(ctx33):
    return bhb(ctx33, BHBParams.build(ctx33, d=2, beta=choose_beta_bar(ctx33)))


@pytest.fixture(scope="session")
def ctx93():
    return make_ctx(TowerParams.from_q(9, 3))
