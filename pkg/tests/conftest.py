import pytest
from hypothesis import HealthCheck, settings

from core.vectors import ClipSpec, NormKind
from mechanisms.privatizer import MechanismSpec, ScaleMode


settings.register_profile(
    'default', deadline=None, max_examples=200,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile('default')


@pytest.fixture
def l2_unit():
    return ClipSpec(NormKind.L2, 1.0)


@pytest.fixture
def l1_unit():
    return ClipSpec(NormKind.L1, 1.0)


@pytest.fixture
def claimed_mechanism():
    return MechanismSpec.build(ScaleMode.CLAIMED_ADEPT, 1.0, 1.0)
