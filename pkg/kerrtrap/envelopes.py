"""Pulse envelope shapes."""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .utils import ConfigError


def gaussian(center, width):
    """Gaussian ``exp(-(z - center)²/(2 width²))``, width is the rms size."""

    def envelope(z):
        return np.exp(-((np.asarray(z) - center) ** 2) / (2 * width ** 2))

    return envelope


def sech(center, width):
    """Hyperbolic secant ``sech((z - center)/width)``."""

    def envelope(z):
        return 1 / np.cosh((np.asarray(z) - center) / width)

    return envelope


def flat_top(center, width, edge=None):
    """Plateau of full width ``width`` with tanh edges of size ``edge``."""
    edge = width / 10 if edge is None else edge
    lo = center - width / 2
    hi = center + width / 2

    def envelope(z):
        z = np.asarray(z)
        return 0.5 * (np.tanh((z - lo) / edge) - np.tanh((z - hi) / edge))

    return envelope


SHAPES = {"gaussian": gaussian, "sech": sech, "flat-top": flat_top}


@dataclass(frozen=True)
class PulseSpec:
    """Description of a pulse envelope.

    Attributes:
        shape: One of ``gaussian``, ``sech``, ``flat-top``.
        center: Position of the pulse center.
        width: Size parameter of the shape.
        normalize: Whether to scale the pulse to one excitation.
        amplitude: Peak amplitude, used when ``normalize`` is false.
        edge: Edge size for ``flat-top``.
    """

    shape: str = "gaussian"
    center: float = 0.0
    width: float = 1.0
    normalize: bool = True
    amplitude: float = 1.0
    edge: Optional[float] = None

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ConfigError(
                f"Unknown pulse shape '{self.shape}';"
                f" expected one of {', '.join(SHAPES)}"
            )
        if not (math.isfinite(self.width) and self.width > 0):
            raise ConfigError(f"Pulse width must be positive: {self.width}")

    def envelope(self):
        """Return the envelope as a callable ``z ↦ complex``."""
        if self.shape == "flat-top":
            base = flat_top(self.center, self.width, self.edge)
        else:
            base = SHAPES[self.shape](self.center, self.width)
        amplitude = self.amplitude

        def envelope(z):
            return amplitude * base(z)

        return envelope
