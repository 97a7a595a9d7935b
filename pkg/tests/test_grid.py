import math

import numpy as np
import pytest

from kerrtrap.envelopes import PulseSpec, flat_top, gaussian, sech
from kerrtrap.grid import (
    Grid,
    GridError,
    midpoint,
    periodic_centroid,
    translate,
)
from kerrtrap.utils import ConfigError

from .common import one_test_per_assert

grid = Grid(64, 2.0, 1.0)


@one_test_per_assert
def test_grid():
    assert grid.dz == 2.0 / 64
    assert len(grid.z) == 64
    assert grid.z[-1] == 2.0 - grid.dz
    assert grid.wavenumbers[1] == pytest.approx(math.pi)
    assert grid.mirror_index[1] == 63
    assert grid.mirror_index[0] == 0
    assert Grid(8, 1.0).medium_length == 1.0


@pytest.mark.parametrize(
    "args", [(7, 1.0), (12, 1.0), (4, 1.0), (8, 0.0), (8, -1.0), (8, 1.0, 0.0)]
)
def test_bad_grid(args):
    with pytest.raises(GridError):
        Grid(*args)


def test_grid_error_is_config_error():
    assert issubclass(GridError, ConfigError)


def test_excitation():
    values = grid.sample(lambda z: np.ones_like(z))
    assert grid.excitation(values) == pytest.approx(2.0)
    assert Grid(64, 2.0).excitation(values) == pytest.approx(1.0)


def test_sample_broadcasts():
    values = grid.sample(lambda z: 3.0)
    assert values.shape == (64,)
    assert values.dtype == complex


def test_check():
    with pytest.raises(GridError):
        grid.check(np.zeros(32))


def test_translate_integer_cells():
    values = grid.sample(gaussian(0.5, 0.1))
    moved = translate(values, 4 * grid.dz, grid)
    assert np.allclose(moved, np.roll(values, 4), atol=1e-12)


def test_translate_mode():
    q = grid.wavenumbers[3]
    values = np.exp(1j * q * grid.z)
    moved = translate(values, 0.123, grid)
    assert np.allclose(moved, np.exp(1j * q * (grid.z - 0.123)), atol=1e-12)


def test_translate_axis():
    values = np.zeros((64, 3), dtype=complex)
    values[5, :] = 1
    moved = translate(values, 2 * grid.dz, grid, axis=0)
    assert np.allclose(moved[7], 1)
    assert np.allclose(moved[5], 0, atol=1e-12)


@one_test_per_assert
def test_midpoint():
    assert midpoint(lambda z: np.ones_like(z), 0.0, 2.0, 4) == 2.0
    assert midpoint(lambda z: z, 0.0, 1.0, 1) == 0.5
    assert midpoint(lambda z: z ** 2, 0.0, 1.0, 1000) == pytest.approx(
        1 / 3, rel=1e-6
    )
    assert list(
        midpoint(lambda z: np.ones_like(z), 0.0, np.array([1.0, 2.0]), 3)
    ) == pytest.approx([1.0, 2.0])


def test_midpoint_panels():
    with pytest.raises(ValueError):
        midpoint(np.sin, 0.0, 1.0, 0)


def test_periodic_centroid():
    weights = sum(
        np.abs(grid.sample(gaussian(1.9 + image, 0.1))) ** 2
        for image in (-2.0, 0.0, 2.0)
    )
    assert periodic_centroid(weights, grid) == pytest.approx(1.9, abs=1e-9)
    with pytest.raises(GridError):
        periodic_centroid(np.zeros(64), grid)


@one_test_per_assert
def test_shapes():
    assert gaussian(0.0, 1.0)(0.0) == 1.0
    assert gaussian(0.0, 1.0)(1.0) == pytest.approx(math.exp(-0.5))
    assert sech(1.0, 2.0)(1.0) == 1.0
    assert sech(0.0, 2.0)(2.0) == pytest.approx(1 / math.cosh(1.0))
    assert flat_top(0.0, 1.0, 0.01)(0.0) == pytest.approx(1.0)
    assert flat_top(0.0, 1.0, 0.01)(0.5) == pytest.approx(0.5)
    assert flat_top(0.0, 1.0, 0.01)(2.0) == pytest.approx(0.0, abs=1e-12)


def test_pulse_spec():
    pulse = PulseSpec("sech", center=1.0, width=0.5, amplitude=2.0)
    assert pulse.envelope()(1.0) == 2.0
    assert PulseSpec("flat-top", width=1.0).envelope()(0.0) == pytest.approx(
        1.0, rel=1e-3
    )


@pytest.mark.parametrize(
    "kwargs", [{"shape": "square"}, {"width": 0.0}, {"width": math.inf}]
)
def test_bad_pulse(kwargs):
    with pytest.raises(ConfigError):
        PulseSpec(**kwargs)
