"""Miscellaneous utilities."""

import math


class ConfigError(Exception):
    """Base class for problems with inputs: parameters, grids, scenarios.

    The command line maps these to exit code 2.
    """


class NumericalError(Exception):
    """Base class for failures detected while computing.

    The command line maps these to exit code 4.
    """


class PhysicsWarning(UserWarning):
    """Base class for physics-validity caveats."""


def wrap_phase(phase, low=0.0):
    """Map a phase onto the interval ``[low, low + 2π)``."""
    return (phase - low) % (2 * math.pi) + low


def phase_distance(a, b):
    """Return the circular distance between two phases, in ``[0, π]``."""
    d = wrap_phase(a - b, -math.pi)
    return abs(d)


def require_positive(**values):
    """Return the names of the given values that are not strictly positive.

    Non-finite values are reported as well.
    """
    return [
        name
        for name, value in values.items()
        if not (math.isfinite(value) and value > 0)
    ]
