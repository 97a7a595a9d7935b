"""Periodic one-dimensional grids and the spectral helpers built on them."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import fft

from .utils import ConfigError


class GridError(ConfigError, ValueError):
    """Malformed grid, or arrays that do not match their grid."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid ``z_j = j·dz`` on ``[0, length)``.

    Attributes:
        n_cells: Number of cells, a power of two no smaller than 8.
        length: Length of the periodic domain.
        medium_length: Length of the medium, used to normalize excitation
            numbers as ``(1/medium_length)∫|Ψ|²dz``. Defaults to ``length``.
            The domain may be longer than the medium so that pulses start
            fully outside each other.
    """

    n_cells: int
    length: float
    medium_length: Optional[float] = None

    def __post_init__(self):
        n = self.n_cells
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise GridError(
                f"n_cells must be a power of two >= 8, got {self.n_cells}"
            )
        if not (math.isfinite(self.length) and self.length > 0):
            raise GridError(f"length must be positive, got {self.length}")
        if self.medium_length is None:
            object.__setattr__(self, "medium_length", self.length)
        elif not (
            math.isfinite(self.medium_length) and self.medium_length > 0
        ):
            raise GridError(
                f"medium_length must be positive, got {self.medium_length}"
            )

    @property
    def dz(self):
        return self.length / self.n_cells

    @property
    def z(self):
        return np.arange(self.n_cells) * self.dz

    @property
    def wavenumbers(self):
        """Angular wavenumbers in FFT order."""
        return 2 * math.pi * fft.fftfreq(self.n_cells, d=self.dz)

    @property
    def mirror_index(self):
        """Index array mapping each wavenumber slot to the slot of ``-q``."""
        return (-np.arange(self.n_cells)) % self.n_cells

    def sample(self, envelope):
        """Sample a callable ``z ↦ complex`` on the grid."""
        values = np.asarray(envelope(self.z), dtype=complex)
        return np.broadcast_to(values, (self.n_cells,)).copy()

    def excitation(self, values):
        """Excitation number ``(1/medium_length)Σ|Ψ|²dz``."""
        return float(np.sum(np.abs(values) ** 2) * self.dz / self.medium_length)

    def check(self, values):
        values = np.asarray(values)
        if values.shape[-1] != self.n_cells:
            raise GridError(
                f"Expected {self.n_cells} samples, got {values.shape[-1]}"
            )
        return values


def translate(values, distance, grid, axis=-1):
    """Translate samples by ``distance`` along ``axis``, exactly in q-space.

    The result is ``f(z - distance)`` for the band-limited interpolant ``f``
    of ``values``, wrapped periodically.
    """
    k = grid.wavenumbers
    shape = [1] * np.ndim(values)
    shape[axis] = grid.n_cells
    phase = np.exp(-1j * k * distance).reshape(shape)
    return fft.ifft(fft.fft(values, axis=axis) * phase, axis=axis)


def midpoint(fn, a, b, panels):
    """Composite midpoint rule for ``∫_a^b fn(z) dz``.

    ``b`` may be an array, in which case one integral is computed per entry.
    ``fn`` must accept numpy arrays.
    """
    if panels < 1:
        raise ValueError("panels must be at least 1")
    b = np.asarray(b, dtype=float)
    width = (b - a) / panels
    offsets = (np.arange(panels) + 0.5) / panels
    nodes = a + np.multiply.outer(b - a, offsets)
    return np.sum(fn(nodes), axis=-1) * width


def periodic_centroid(weights, grid):
    """Centroid of nonnegative weights on the periodic grid."""
    angle = 2 * math.pi * grid.z / grid.length
    moment = np.sum(weights * np.exp(1j * angle))
    if moment == 0:
        raise GridError("Centroid undefined for empty or uniform weights")
    return (np.angle(moment) % (2 * math.pi)) * grid.length / (2 * math.pi)
