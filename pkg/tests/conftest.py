from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from otlab.exactnum import NumberField, Poly
from otlab.otstruct import build_ot_data

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

SEXTIC = [1, -2, -1, 2, 0, 0, 1]
SEXTIC_UNITS = [[0, 1], [1, -1]]
CUBIC = [-1, -1, 0, 1]
CUBIC_UNITS = [[0, 1]]
SEPTIC = [-1, -1, 0, 0, 0, 0, 0, 1]      # signature (1, 3)
SEPTIC_UNITS = [[0, 1]]
SEXTIC_ALT_UNITS = [[0, 1], [1, 1]]     # same field, a group without pluriclosed metric


def make_data(coeffs, units, precision=256, branch=None):
    return build_ot_data(NumberField(Poly(coeffs)), units, precision, branch=branch)


@pytest.fixture(scope="session")
def sextic_field():
    return NumberField(Poly(SEXTIC))


@pytest.fixture(scope="session")
def sextic():
    return make_data(SEXTIC, SEXTIC_UNITS)


@pytest.fixture(scope="session")
def cubic():
    return make_data(CUBIC, CUBIC_UNITS)


@pytest.fixture(scope="session")
def septic():
    return make_data(SEPTIC, SEPTIC_UNITS)


@pytest.fixture(scope="session")
def sextic_alt():
    return make_data(SEXTIC, SEXTIC_ALT_UNITS)
