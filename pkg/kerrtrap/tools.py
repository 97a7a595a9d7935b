"""Cadence filters deciding when observers sample a running evolution.

A cadence is called as ``cadence(step, t)`` with the index of the step just
completed (0 for the initial state) and the simulation time. Evolutions
always sample their initial and final states regardless of the cadence.
"""


class StepRange:
    """Select step indices in ``[start, end)`` spaced by ``modulo``."""

    def __init__(self, start=0, end=None, modulo=None):
        self.start = start
        self.end = end
        self.modulo = modulo

    def __call__(self, step, t=None):
        if self.start is not None and step < self.start:
            return False
        if self.end is not None and step >= self.end:
            return False
        if self.modulo:
            return (step - (self.start or 0)) % self.modulo == 0
        return True

    def __repr__(self):
        return f"StepRange({self.start}, {self.end}, modulo={self.modulo})"


def every(modulo=None, start=0, end=None):
    """Sample every ``modulo`` steps, from ``start`` up to ``end``."""
    return StepRange(modulo=modulo, start=start, end=end)


def default_cadence(n_steps, samples=100):
    """Cadence yielding about ``samples`` samples over ``n_steps`` steps."""
    return every(max(1, n_steps // samples))
