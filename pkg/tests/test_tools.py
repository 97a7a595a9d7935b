from kerrtrap.tools import default_cadence, every

from .common import one_test_per_assert


def _r(*args):
    return list(range(*args))


def _sampled(cadence, steps):
    return [i for i in steps if cadence(i, 0.1 * i)]


@one_test_per_assert
def test_every():
    assert _sampled(every(), _r(10)) == _r(10)
    assert _sampled(every(2), _r(10)) == _r(0, 10, 2)
    assert _sampled(every(3), _r(10)) == _r(0, 10, 3)
    assert _sampled(every(3, start=5), _r(10)) == _r(5, 10, 3)
    assert _sampled(every(3, end=5), _r(10)) == _r(0, 5, 3)


@one_test_per_assert
def test_default_cadence():
    assert len(_sampled(default_cadence(1000), _r(1000))) == 100
    assert _sampled(default_cadence(5), _r(5)) == _r(5)
    assert len(_sampled(default_cadence(1000, samples=10), _r(1000))) == 10


def test_repr():
    assert repr(every(2)) == "StepRange(0, None, modulo=2)"
