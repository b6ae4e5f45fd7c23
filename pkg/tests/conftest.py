import pytest
from hypothesis import HealthCheck, settings

from qhx.core.config import get_settings
from qhx.geometry.domains import IteratedLogCusp, PowerCusp, UnitDisk

settings.register_profile(
    "qhx",
    max_examples=40,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("qhx")


@pytest.fixture(autouse=True)
def _fresh_settings(monkeypatch):
    monkeypatch.delenv("QHX_THREADS", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def disk():
    return UnitDisk()


@pytest.fixture
def model_cusp():
    return PowerCusp(s=0.5, model="model")


@pytest.fixture
def graph_cusp():
    return PowerCusp(s=0.5, model="graph")


@pytest.fixture
def loglog_cusp():
    return IteratedLogCusp(s=0.5, sigma=(1.0,))
