import math

from kerrtrap.utils import (
    ConfigError,
    NumericalError,
    phase_distance,
    require_positive,
    wrap_phase,
)

from .common import one_test_per_assert


@one_test_per_assert
def test_wrap_phase():
    assert wrap_phase(0.0) == 0.0
    assert wrap_phase(2 * math.pi) == 0.0
    assert math.isclose(wrap_phase(-math.pi / 2), 3 * math.pi / 2)
    assert math.isclose(wrap_phase(3 * math.pi, -math.pi), -math.pi)
    assert math.isclose(wrap_phase(1.0, -math.pi), 1.0)


@one_test_per_assert
def test_phase_distance():
    assert phase_distance(0.0, 0.0) == 0.0
    assert math.isclose(phase_distance(0.1, 2 * math.pi - 0.1), 0.2)
    assert math.isclose(phase_distance(math.pi, -math.pi), 0.0, abs_tol=1e-15)
    assert math.isclose(phase_distance(0.0, math.pi), math.pi)


@one_test_per_assert
def test_require_positive():
    assert require_positive(a=1.0, b=2) == []
    assert require_positive(a=0.0, b=-1.0, c=3.0) == ["a", "b"]
    assert require_positive(a=math.nan, b=math.inf) == ["a", "b"]


def test_error_families_are_distinct():
    assert not issubclass(ConfigError, NumericalError)
    assert not issubclass(NumericalError, ConfigError)
