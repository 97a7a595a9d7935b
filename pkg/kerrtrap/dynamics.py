"""Mean-field evolution of the trapped signal and the slow probe.

The c-number limit of the polariton equations is integrated on a periodic
grid by operator splitting. Every sub-step is exact:

* advection at ``+v_s`` (forward signal), ``-v_s`` (backward signal) and
  ``v_p`` (probe) is a phase factor in q-space;
* Bragg coupling is a 2×2 rotation by ``β·dt`` in each cell;
* cross-phase modulation and absorption multiply each cell by
  ``exp(iηI dt - κ dt)``, with the intensity of the other field.

Evolution loops report their progress with :func:`giving.give`.
"""

import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from giving import give
from scipy import fft

from .grid import Grid, GridError, periodic_centroid, translate
from .tools import default_cadence
from .utils import ConfigError, NumericalError, PhysicsWarning

SCHEMES = ("strang", "lie")


class CFLError(ConfigError, ValueError):
    """The time step exceeds ``dz/max(v_s, v_p)``."""


class IntegratorInstability(NumericalError):
    """Non-finite fields, or excitation numbers drifting in a lossless run."""


class EmptySupportError(NumericalError):
    """There is no probe left to measure a phase on."""


class NormDriftWarning(PhysicsWarning):
    """Lossless excitation numbers drift more than expected from rounding."""


@dataclass(eq=False)
class FieldState:
    """Complex envelopes of the three polariton fields at time ``t``.

    Amplitudes are normalized so that ``(1/L)∫|Ψ|²dz`` is an excitation
    number, with ``L`` the medium length of the grid.
    """

    grid: Grid
    psi_plus: np.ndarray
    psi_minus: np.ndarray
    psi_p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for name in ("psi_plus", "psi_minus", "psi_p"):
            values = np.asarray(getattr(self, name), dtype=complex)
            setattr(self, name, self.grid.check(values))

    @property
    def signal_intensity(self):
        return np.abs(self.psi_plus) ** 2 + np.abs(self.psi_minus) ** 2

    @property
    def probe_intensity(self):
        return np.abs(self.psi_p) ** 2

    @property
    def signal_norm(self):
        return float(
            np.sum(self.signal_intensity)
            * self.grid.dz
            / self.grid.medium_length
        )

    @property
    def probe_norm(self):
        return self.grid.excitation(self.psi_p)

    def is_finite(self):
        return bool(
            np.all(np.isfinite(self.psi_plus))
            and np.all(np.isfinite(self.psi_minus))
            and np.all(np.isfinite(self.psi_p))
        )

    def copy(self):
        return FieldState(
            grid=self.grid,
            psi_plus=self.psi_plus.copy(),
            psi_minus=self.psi_minus.copy(),
            psi_p=self.psi_p.copy(),
            t=self.t,
        )


@dataclass(frozen=True)
class IntegratorSettings:
    """Time stepping options.

    Attributes:
        dt: Time step.
        scheme: ``"strang"`` (second order) or ``"lie"`` (first order).
        drift_tolerance: Relative change of a lossless excitation number in a
            single step above which the step fails.
        drift_warning: Relative change per step above which a
            :class:`NormDriftWarning` is issued.
    """

    dt: float
    scheme: str = "strang"
    drift_tolerance: float = 1e-9
    drift_warning: float = 1e-12

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.scheme not in SCHEMES:
            raise ConfigError(
                f"Unknown splitting scheme '{self.scheme}';"
                f" expected one of {', '.join(SCHEMES)}"
            )


def _normalized(grid, envelope, normalize, name):
    if envelope is None:
        return np.zeros(grid.n_cells, dtype=complex)
    values = grid.sample(envelope)
    if normalize:
        norm = grid.excitation(values)
        if norm == 0:
            raise ConfigError(f"Cannot normalize the all-zero {name} envelope")
        values = values / math.sqrt(norm)
    return values


def init_state(grid, probe_envelope, signal_envelope, normalize=True, t=0.0):
    """Sample the initial fields: forward signal, empty backward, probe.

    Arguments:
        grid: The :class:`~kerrtrap.grid.Grid`.
        probe_envelope: Callable ``z ↦ complex``, or None for no probe.
        signal_envelope: Callable ``z ↦ complex``, or None for no signal.
        normalize: Scale each given envelope to one excitation. A pair
            ``(probe, signal)`` sets it per field.
        t: Initial time.
    """
    if isinstance(normalize, (bool, np.bool_)):
        normalize = (normalize, normalize)
    norm_probe, norm_signal = normalize
    return FieldState(
        grid=grid,
        psi_plus=_normalized(grid, signal_envelope, norm_signal, "signal"),
        psi_minus=np.zeros(grid.n_cells, dtype=complex),
        psi_p=_normalized(grid, probe_envelope, norm_probe, "probe"),
        t=t,
    )


def _relative_drift(before, after):
    if before == 0:
        return 0.0
    return abs(after - before) / before


class SplitStepper:
    """Advance :class:`FieldState` objects on one grid with fixed rates.

    The q-space phase factors are computed once. Each stepper owns its
    factors, so separate simulations can run concurrently.
    """

    def __init__(self, grid, rates, settings, dt=None):
        self.grid = grid
        self.rates = rates
        self.settings = settings
        self.dt = settings.dt if dt is None else dt
        vmax = max(rates.v_s, rates.v_p)
        if vmax > 0 and self.dt > grid.dz / vmax * (1 + 1e-12):
            raise CFLError(
                f"dt = {self.dt} exceeds dz/max(v_s, v_p) = {grid.dz / vmax}"
            )
        self.strang = settings.scheme == "strang"
        sub = self.dt / 2 if self.strang else self.dt
        k = grid.wavenumbers
        self.advect_plus = np.exp(-1j * k * rates.v_s * sub)
        self.advect_minus = np.exp(1j * k * rates.v_s * sub)
        self.advect_probe = np.exp(-1j * k * rates.v_p * sub)
        angle = rates.beta * sub
        self.bragg = (math.cos(angle), 1j * math.sin(angle))

    def _advect(self, plus, minus, probe):
        return (
            fft.ifft(fft.fft(plus) * self.advect_plus),
            fft.ifft(fft.fft(minus) * self.advect_minus),
            fft.ifft(fft.fft(probe) * self.advect_probe),
        )

    def _bragg(self, plus, minus):
        c, s = self.bragg
        return c * plus + s * minus, s * plus + c * minus

    def _kerr(self, plus, minus, probe):
        r = self.rates
        dt = self.dt
        I_s = np.abs(plus) ** 2 + np.abs(minus) ** 2
        I_p = np.abs(probe) ** 2
        signal_factor = np.exp((1j * r.eta * I_p - r.kappa_s) * dt)
        probe_factor = np.exp((1j * r.eta * I_s - r.kappa_p) * dt)
        return plus * signal_factor, minus * signal_factor, probe * probe_factor

    def advance(self, state):
        """Return the state one step later."""
        plus, minus, probe = state.psi_plus, state.psi_minus, state.psi_p
        if self.strang:
            plus, minus, probe = self._advect(plus, minus, probe)
            plus, minus = self._bragg(plus, minus)
            plus, minus, probe = self._kerr(plus, minus, probe)
            plus, minus = self._bragg(plus, minus)
            plus, minus, probe = self._advect(plus, minus, probe)
        else:
            plus, minus, probe = self._advect(plus, minus, probe)
            plus, minus = self._bragg(plus, minus)
            plus, minus, probe = self._kerr(plus, minus, probe)

        new = FieldState(
            grid=state.grid,
            psi_plus=plus,
            psi_minus=minus,
            psi_p=probe,
            t=state.t + self.dt,
        )
        if not new.is_finite():
            raise IntegratorInstability(f"Non-finite fields at t = {new.t}")
        if self.rates.lossless:
            self._check_drift(state, new)
        return new

    def _check_drift(self, old, new):
        drift = max(
            _relative_drift(old.signal_norm, new.signal_norm),
            _relative_drift(old.probe_norm, new.probe_norm),
        )
        if drift > self.settings.drift_tolerance:
            raise IntegratorInstability(
                f"Excitation number drifted by {drift:.3g} in one step"
                f" at t = {new.t}"
            )
        if drift > self.settings.drift_warning:
            warnings.warn(
                f"Excitation number drifted by {drift:.3g} at t = {new.t}",
                NormDriftWarning,
            )


def step(state, rates, settings):
    """Advance ``state`` by one time step ``settings.dt``."""
    return SplitStepper(state.grid, rates, settings).advance(state)


@dataclass(frozen=True)
class PhaseProfile:
    """Probe phase acquired between two states.

    Attributes:
        phase: Unwrapped phase per cell, NaN outside the support.
        support: Cells where the probe intensity exceeds the threshold.
        mean: Mean phase over the support.
        max_deviation: Largest distance of a support cell from the mean.
        displacement: Distance the initial probe was moved by for alignment.
    """

    phase: np.ndarray
    support: np.ndarray
    mean: float
    max_deviation: float
    displacement: float


def probe_phase_shift(initial, final, rates=None, support=1e-6):
    """Phase of the final probe relative to the translated initial probe.

    The initial probe is translated by ``v_p·(t_final - t_initial)`` when
    ``rates`` is given, otherwise by the displacement of its centroid. The
    phase is unwrapped along z through the support. Its branch puts the most
    intense cell in ``(φ/2 - π, φ/2 + π]``, with ``φ = rates.phi`` or 0, so
    that both no shift and a full shift ``φ`` read without a wrap.

    Arguments:
        initial: :class:`FieldState` before the interaction.
        final: :class:`FieldState` after the interaction.
        rates: :class:`~kerrtrap.params.PolaritonRates`, optional.
        support: Cells with ``|Ψ_p|² > support·max|Ψ_p|²`` are measured.

    Raises:
        GridError: If the states live on different grids.
        EmptySupportError: If the probe is empty in either state.
    """
    grid = initial.grid
    if final.grid != grid:
        raise GridError("probe_phase_shift needs states on the same grid")
    I_final = final.probe_intensity
    if I_final.max() == 0 or initial.probe_intensity.max() == 0:
        raise EmptySupportError("The probe is empty")
    if rates is not None:
        displacement = rates.v_p * (final.t - initial.t)
    else:
        displacement = periodic_centroid(I_final, grid) - periodic_centroid(
            initial.probe_intensity, grid
        )
    reference = translate(initial.psi_p, displacement, grid)

    I_ref = np.abs(reference) ** 2
    mask = (I_final > support * I_final.max()) & (I_ref > support * I_ref.max())
    if not mask.any():
        raise EmptySupportError("The probe support is empty")

    raw = np.angle(final.psi_p * np.conj(reference))
    n = grid.n_cells
    gaps = np.flatnonzero(~mask)
    start = gaps[0] if len(gaps) else 0
    order = (start + np.arange(n)) % n
    cells = order[mask[order]]
    unwrapped = np.unwrap(raw[cells])

    center = 0.0 if rates is None else rates.phi / 2
    peak = unwrapped[np.argmax(I_final[cells])]
    unwrapped = unwrapped - 2 * math.pi * math.ceil(
        (peak - center - math.pi) / (2 * math.pi)
    )

    phase = np.full(n, np.nan)
    phase[cells] = unwrapped
    mean = float(np.mean(unwrapped))
    return PhaseProfile(
        phase=phase,
        support=mask,
        mean=mean,
        max_deviation=float(np.max(np.abs(unwrapped - mean))),
        displacement=displacement,
    )


def _phase_or_zero(initial, state, rates):
    try:
        return probe_phase_shift(initial, state, rates)
    except EmptySupportError:
        return None


def _mean_phase(state, initial, rates):
    profile = _phase_or_zero(initial, state, rates)
    return 0.0 if profile is None else profile.mean


def _phase_deviation(state, initial, rates):
    profile = _phase_or_zero(initial, state, rates)
    return 0.0 if profile is None else profile.max_deviation


DEFAULT_OBSERVERS = {
    "norm_signal": lambda state, initial, rates: state.signal_norm,
    "norm_probe": lambda state, initial, rates: state.probe_norm,
    "mean_phase": _mean_phase,
    "deviation": _phase_deviation,
}


@dataclass(eq=False)
class Trajectory:
    """Observables sampled during :func:`evolve`.

    Attributes:
        steps: Step index of each sample.
        times: Time of each sample.
        values: Observable name to the list of its samples.
        final: The state at the end of the evolution.
    """

    steps: List[int] = field(default_factory=list)
    times: List[float] = field(default_factory=list)
    values: Dict[str, list] = field(default_factory=dict)
    final: Optional[FieldState] = None

    def __getitem__(self, name):
        return self.values[name]

    def columns(self):
        return ["t", *self.values]

    def rows(self):
        for i, t in enumerate(self.times):
            yield [t, *(self.values[name][i] for name in self.values)]

    def as_table(self):
        return {"columns": self.columns(), "rows": list(self.rows())}


def evolve(
    state, rates, settings, T_total, observers=None, cadence=None
):
    """Evolve ``state`` for ``T_total`` and sample observables.

    The initial and final states are always sampled. If ``T_total`` is not a
    multiple of ``settings.dt``, the last step is shortened.

    Arguments:
        state: Initial :class:`FieldState`.
        rates: :class:`~kerrtrap.params.PolaritonRates`.
        settings: :class:`IntegratorSettings`.
        T_total: Duration, positive.
        observers: Mapping from names to ``fn(state, initial, rates)``.
            Defaults to :data:`DEFAULT_OBSERVERS`.
        cadence: Predicate ``cadence(step, t)`` selecting sampled steps
            (see :mod:`kerrtrap.tools`). Defaults to about 100 samples.

    Returns:
        A :class:`Trajectory`.
    """
    if not (math.isfinite(T_total) and T_total > 0):
        raise ConfigError(f"T_total must be positive, got {T_total}")
    observers = DEFAULT_OBSERVERS if observers is None else observers
    dt = settings.dt
    n_full = int(math.floor(T_total / dt + 1e-9))
    remainder = T_total - n_full * dt
    steppers = [SplitStepper(state.grid, rates, settings)] * n_full
    if remainder > 1e-12 * T_total:
        steppers.append(SplitStepper(state.grid, rates, settings, remainder))
    n_steps = len(steppers)
    cadence = default_cadence(n_steps) if cadence is None else cadence

    trajectory = Trajectory(values={name: [] for name in observers})
    initial = state

    def sample(i, current):
        values = {
            name: fn(current, initial, rates) for name, fn in observers.items()
        }
        trajectory.steps.append(i)
        trajectory.times.append(current.t)
        for name, value in values.items():
            trajectory.values[name].append(value)
        give(event="sample", step=i, t=current.t, **values)

    sample(0, state)
    for i, stepper in enumerate(steppers, start=1):
        state = stepper.advance(state)
        if i == n_steps or cadence(i, state.t):
            sample(i, state)
    trajectory.final = state
    return trajectory


SNAPSHOT_HEADER = np.dtype(
    [("n_cells", "<u8"), ("length", "<f8"), ("t", "<f8")]
)


def dump_snapshot(state, path):
    """Write ``state`` in the binary snapshot layout.

    The layout is a header (``n_cells`` as little-endian uint64, domain
    length and time as little-endian float64) followed by ``psi_plus``,
    ``psi_minus`` and ``psi_p``, each as ``n_cells`` little-endian
    (real, imag) float64 pairs.
    """
    header = np.array(
        [(state.grid.n_cells, state.grid.length, state.t)],
        dtype=SNAPSHOT_HEADER,
    )
    try:
        with open(path, "wb") as f:
            f.write(header.tobytes())
            for values in (state.psi_plus, state.psi_minus, state.psi_p):
                f.write(values.astype("<c16").tobytes())
    except OSError as exc:
        raise OSError(f"Could not write snapshot to {path}: {exc}") from exc


def load_snapshot(path, medium_length=None):
    """Read a snapshot written by :func:`dump_snapshot`."""
    with open(path, "rb") as f:
        data = f.read()
    header = np.frombuffer(data, dtype=SNAPSHOT_HEADER, count=1)[0]
    n = int(header["n_cells"])
    arrays = np.frombuffer(
        data, dtype="<c16", count=3 * n, offset=SNAPSHOT_HEADER.itemsize
    ).reshape(3, n)
    grid = Grid(n, float(header["length"]), medium_length)
    return FieldState(
        grid=grid,
        psi_plus=arrays[0].astype(complex),
        psi_minus=arrays[1].astype(complex),
        psi_p=arrays[2].astype(complex),
        t=float(header["t"]),
    )
