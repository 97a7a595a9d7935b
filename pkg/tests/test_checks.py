import pytest

from kerrtrap.checks import (
    CHECKS,
    OracleCheck,
    check_coherent_fock,
    check_signal_mode,
    check_two_photon_dense,
    check_two_photon_order,
)

from .common import one_test_per_assert


@one_test_per_assert
def test_oracle_check_passed():
    assert OracleCheck("a", 1e-7, 1e-6).passed
    assert OracleCheck("a", 1e-6, 1e-6).passed
    assert not OracleCheck("a", 1e-5, 1e-6).passed


@pytest.mark.parametrize(
    "check,name",
    [
        (check_signal_mode, "signal_mode"),
        (check_two_photon_dense, "two_photon_dense"),
        (check_two_photon_order, "two_photon_order"),
        (check_coherent_fock, "coherent_fock"),
    ],
)
def test_check(check, name):
    result = check()
    assert result.name == name
    assert result.passed, result


def test_all_checks_listed():
    assert len(CHECKS) == 4
