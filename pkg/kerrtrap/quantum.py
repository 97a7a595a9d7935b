"""Quantum sector.

Two restricted sectors are covered:

* multimode coherent inputs, whose field expectations are known in closed
  form (:func:`coherent_expectation`) and checked against a brute-force
  truncated Fock-space computation (:func:`truncated_fock_expectation`);
* one probe excitation plus one signal excitation, evolved on a grid
  (:func:`trotter_evolve`, :func:`dense_evolve`) and compared with the
  closed-form output state (:func:`closed_form_output`).

The two-excitation amplitudes are indexed ``(probe cell, signal cell,
branch)``, with branch 0 the forward and branch 1 the backward signal.
Probe motion is exact: the evolution runs in the probe's co-moving frame,
entered and left by spectral translations. In that frame the probe-signal
contact term depends on time. Its phase is integrated exactly over each
step with a hat kernel one cell wide, so a full crossing imprints exactly
``ηL/v_p`` on any grid.

Absorption is not part of this sector: only ``Re(η)`` is used.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from giving import give
from scipy import fft
from scipy.linalg import expm

from .grid import Grid, midpoint, translate
from .oracles import TrappingRegimeWarning
from .tools import every
from .utils import ConfigError, NumericalError, PhysicsWarning, wrap_phase

ALL_TERMS = frozenset({"probe_kinetic", "signal_kinetic", "bragg", "contact"})


class ConfigurationError(ConfigError, ValueError):
    """Inconsistent grid, rates or Hamiltonian terms."""


class PrematureReadoutError(ConfigError, ValueError):
    """The output is requested before the probe has left the medium."""


class IllConditionedError(NumericalError):
    """An overlap is too small to carry a reliable phase."""


class NormDriftError(NumericalError):
    """The norm of a unitary evolution drifted beyond tolerance."""


class DroppedLossWarning(PhysicsWarning):
    """Absorption and cross-absorption rates are ignored by this sector."""


###################
# Coherent states #
###################


@dataclass(frozen=True, eq=False)
class CoherentInput:
    """Multimode coherent input fields, given by Fourier coefficients.

    The envelopes are ``α₊(z) = Σ_q α₊^q e^{iqz}`` for the signal and
    ``α_p(τ) = Σ_q α_p^q e^{-iqcτ}`` for the probe.

    Attributes:
        probe_q: Probe mode wavevectors.
        probe_alpha: Probe mode amplitudes.
        signal_q: Signal mode wavevectors.
        signal_alpha: Signal mode amplitudes.
        c: Light speed, in the units of the rates.
    """

    probe_q: np.ndarray
    probe_alpha: np.ndarray
    signal_q: np.ndarray
    signal_alpha: np.ndarray
    c: float

    def __post_init__(self):
        for name in ("probe_q", "probe_alpha", "signal_q", "signal_alpha"):
            values = np.atleast_1d(np.asarray(getattr(self, name)))
            object.__setattr__(self, name, values)
        if len(self.probe_q) != len(self.probe_alpha) or len(
            self.signal_q
        ) != len(self.signal_alpha):
            raise ConfigurationError(
                "Each mode list needs as many amplitudes as wavevectors"
            )

    @classmethod
    def from_samples(cls, grid, signal_values, tau_step, probe_values, c):
        """Build an input from sampled envelopes.

        Arguments:
            grid: Grid on which ``signal_values`` are sampled.
            signal_values: ``α₊(z_j)``.
            tau_step: Spacing of the probe time samples.
            probe_values: ``α_p(j·tau_step)``.
            c: Light speed.
        """
        signal_values = grid.check(np.asarray(signal_values, dtype=complex))
        probe_values = np.asarray(probe_values, dtype=complex)
        n = len(probe_values)
        omegas = 2 * math.pi * fft.fftfreq(n, d=tau_step)
        return cls(
            probe_q=omegas / c,
            probe_alpha=fft.ifft(probe_values),
            signal_q=grid.wavenumbers,
            signal_alpha=fft.fft(signal_values) / grid.n_cells,
            c=c,
        )

    def alpha_plus(self, z):
        z = np.asarray(z, dtype=float)
        return np.exp(1j * np.multiply.outer(z, self.signal_q)) @ (
            self.signal_alpha
        )

    def alpha_p(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.exp(-1j * np.multiply.outer(tau, self.probe_q * self.c)) @ (
            self.probe_alpha
        )


def _real_eta(rates):
    if rates.eta.imag or rates.kappa_s or rates.kappa_p:
        warnings.warn(
            "The quantum sector ignores absorption and Im(eta)",
            DroppedLossWarning,
        )
        give(event="cross_absorption", dropped=rates.eta.imag)
    return rates.eta.real


def coherent_expectation(inp, rates, z, t, panels=256):
    """Field expectations for coherent inputs after the interaction.

    With ``φ = ηL/v_p`` and ``τ = t - z/v_p``:

    * ``⟨E_p⟩ = α_p(τ)·exp[(e^{iφc/v_s} - 1)(1/L)∫₀^z |α₊|²dz']``
    * ``⟨E_±⟩ = α₊(z)·exp[(e^{iφ} - 1)(c/L)∫₀^t |α_p(t' - z/v_p)|²dt']``
      times ``cos(βt)`` or ``i·sin(βt)``.

    A complex ``η`` is used as given. Integrals use the midpoint rule.

    Returns:
        ``(⟨E_p⟩, ⟨E₊⟩, ⟨E₋⟩)``.
    """
    z = float(z)
    t = float(t)
    phi = rates.eta * rates.L / rates.v_p
    c = inp.c

    def signal_intensity(x):
        return np.abs(inp.alpha_plus(x)) ** 2

    def probe_intensity(tp):
        return np.abs(inp.alpha_p(tp - z / rates.v_p)) ** 2

    n_signal = midpoint(signal_intensity, 0.0, z, panels) / rates.L
    n_probe = c * midpoint(probe_intensity, 0.0, t, panels) / rates.L
    probe = inp.alpha_p(t - z / rates.v_p) * np.exp(
        (np.exp(1j * phi * c / rates.v_s) - 1) * n_signal
    )
    signal = inp.alpha_plus(z) * np.exp((np.exp(1j * phi) - 1) * n_probe)
    return (
        complex(probe),
        complex(signal * math.cos(rates.beta * t)),
        complex(1j * signal * math.sin(rates.beta * t)),
    )


def classical_probe_phase(inp, rates, z, panels=256):
    """Classical probe phase ``(ηc/(v_p v_s))∫₀^z |α₊|²dz'``."""
    integral = midpoint(
        lambda x: np.abs(inp.alpha_plus(x)) ** 2, 0.0, float(z), panels
    )
    return rates.eta.real * inp.c / (rates.v_p * rates.v_s) * float(integral)


def pi_shift_signal_number(rates, c):
    """Signal excitation ``(1/L)∫|α₊|²`` giving a classical phase of π."""
    return math.pi * rates.v_s / (rates.eta.real * rates.L / rates.v_p * c)


@dataclass(frozen=True)
class FockEstimate:
    """Brute-force expectation and the probability lost to truncation."""

    value: complex
    truncation: float


def _coherent_vector(alpha, n_max):
    """Coefficients ``e^{-|α|²/2} αⁿ/√n!`` for ``n <= n_max``."""
    n = np.arange(1, n_max + 1)
    coeffs = np.concatenate([[1.0 + 0j], np.cumprod(alpha / np.sqrt(n))])
    return math.exp(-abs(alpha) ** 2 / 2) * coeffs


def truncated_fock_expectation(alpha_p, signal_alphas, theta, n_max=6):
    """``⟨a_p⟩`` after a cross-Kerr phase, by brute force in Fock space.

    The probe mode and each signal mode start in truncated coherent states.
    The interaction multiplies ``|n_p, n_1, ..., n_M⟩`` by
    ``exp(iθ·n_p·Σn_j)``.

    Arguments:
        alpha_p: Probe coherent amplitude.
        signal_alphas: Coherent amplitudes of the signal modes.
        theta: Phase per probe-signal photon pair.
        n_max: Largest photon number kept per mode.

    Returns:
        A :class:`FockEstimate`.
    """
    vectors = [_coherent_vector(alpha_p, n_max)]
    vectors += [
        _coherent_vector(a, n_max) for a in np.atleast_1d(signal_alphas)
    ]
    state = vectors[0]
    for v in vectors[1:]:
        state = np.multiply.outer(state, v)
    norm = float(np.sum(np.abs(state) ** 2))

    n = np.arange(n_max + 1)
    total = np.zeros(())
    for i in range(1, len(vectors)):
        shape = [1] * len(vectors)
        shape[i] = n_max + 1
        total = total + n.reshape(shape)
    n_p = n.reshape([n_max + 1] + [1] * (len(vectors) - 1))
    state = state * np.exp(1j * theta * n_p * total)

    lowered = np.sqrt(n[1:]).reshape([n_max] + [1] * (len(vectors) - 1))
    value = np.sum(np.conj(state[:-1]) * lowered * state[1:])
    return FockEstimate(value=complex(value / norm), truncation=1 - norm)


def fock_probe_expectation(inp, rates, z, t, cells=3, n_max=6):
    """Brute-force version of the probe part of :func:`coherent_expectation`.

    The signal over ``[0, z]`` is split into ``cells`` independent modes at
    the midpoint nodes, each holding ``|α₊(z_j)|²Δz/L`` photons on average.
    The phase per photon pair is ``φc/v_s``.
    """
    width = z / cells
    nodes = (np.arange(cells) + 0.5) * width
    alphas = inp.alpha_plus(nodes) * math.sqrt(width / rates.L)
    theta = rates.eta.real * rates.L / rates.v_p * inp.c / rates.v_s
    alpha_p = complex(inp.alpha_p(t - z / rates.v_p))
    return truncated_fock_expectation(alpha_p, alphas, theta, n_max)


####################
# Two-photon state #
####################


@dataclass(frozen=True, eq=False)
class SinglePhotonWavepacket:
    """Single excitation ``Σ_q ξ^q |1^q⟩`` on a grid.

    ``xi`` holds the Fourier amplitudes in FFT order, with unit norm.
    """

    grid: Grid
    xi: np.ndarray

    def __post_init__(self):
        xi = self.grid.check(np.asarray(self.xi, dtype=complex))
        norm = float(np.sum(np.abs(xi) ** 2))
        if abs(norm - 1) > 1e-9:
            raise ConfigurationError(f"Wavepacket norm is {norm}, not 1")
        object.__setattr__(self, "xi", xi)

    @classmethod
    def from_envelope(cls, grid, envelope):
        """Normalized wavepacket from a callable or sampled envelope."""
        if callable(envelope):
            values = grid.sample(envelope)
        else:
            values = grid.check(np.asarray(envelope, dtype=complex))
        norm = np.sqrt(np.sum(np.abs(values) ** 2))
        if norm == 0:
            raise ConfigurationError("Cannot normalize an empty wavepacket")
        return cls(grid, fft.fft(values / norm, norm="ortho"))

    @classmethod
    def from_backward_cells(cls, grid, cells):
        """Fourier amplitudes, in the ``e^{-iqz}`` convention, of cells."""
        return cls(grid, fft.ifft(np.asarray(cells), norm="ortho"))

    def envelope(self):
        """Cell amplitudes ``Σ_q ξ^q e^{iqz}/√N``."""
        return fft.ifft(self.xi, norm="ortho")

    def mirrored(self):
        """Wavepacket with amplitudes ``ξ^{-q}``, as for the backward branch."""
        mirror = self.grid.mirror_index
        return SinglePhotonWavepacket(self.grid, self.xi[mirror])

    def backward_envelope(self):
        """Cell amplitudes when ``xi`` labels ``e^{-iqz}`` modes."""
        return fft.fft(self.xi, norm="ortho")


@dataclass(eq=False)
class TwoPhotonState:
    """Amplitudes ``c[j_p, j_s, σ]`` of one probe and one signal excitation."""

    grid: Grid
    amplitudes: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        n = self.grid.n_cells
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (n, n, 2):
            raise ConfigurationError(
                f"Expected amplitudes of shape {(n, n, 2)},"
                f" got {self.amplitudes.shape}"
            )

    @classmethod
    def product(cls, probe, signal, t=0.0):
        """Probe wavepacket times forward signal wavepacket."""
        if probe.grid != signal.grid:
            raise ConfigurationError("Wavepackets live on different grids")
        n = probe.grid.n_cells
        c = np.zeros((n, n, 2), dtype=complex)
        c[:, :, 0] = np.multiply.outer(probe.envelope(), signal.envelope())
        return cls(probe.grid, c, t)

    def norm(self):
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def overlap(self, other):
        """``⟨self|other⟩``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other):
        return abs(self.overlap(other)) ** 2

    def branch_populations(self):
        """Forward and backward signal populations."""
        pops = np.sum(np.abs(self.amplitudes) ** 2, axis=(0, 1))
        return float(pops[0]), float(pops[1])

    def schmidt_weights(self):
        """Schmidt weights of the probe versus signal bipartition."""
        n = self.grid.n_cells
        s = np.linalg.svd(
            self.amplitudes.reshape(n, 2 * n), compute_uv=False
        )
        return s ** 2

    def copy(self):
        return TwoPhotonState(self.grid, self.amplitudes.copy(), self.t)

    def to_json(self):
        """JSON-ready dict, amplitudes as ``[re, im]`` pairs in C order."""
        flat = self.amplitudes.ravel()
        return {
            "n_cells": self.grid.n_cells,
            "length": self.grid.length,
            "medium_length": self.grid.medium_length,
            "t": self.t,
            "amplitudes": [[float(a.real), float(a.imag)] for a in flat],
        }

    @classmethod
    def from_json(cls, data):
        grid = Grid(data["n_cells"], data["length"], data["medium_length"])
        pairs = np.asarray(data["amplitudes"], dtype=float)
        n = grid.n_cells
        amplitudes = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(n, n, 2)
        return cls(grid, amplitudes, data["t"])


###############
# Hamiltonian #
###############


def _hat_cdf(u):
    u = np.clip(u, -1.0, 1.0)
    return np.where(u <= 0, 0.5 * (1 + u) ** 2, 1 - 0.5 * (1 - u) ** 2)


class TwoPhotonHamiltonian:
    """Matrix-free Hamiltonian of the two-excitation sector.

    Terms, each of which can be switched off:

    * ``probe_kinetic``: rigid probe motion at ``v_p``. Applied exactly as
      the change to and from the probe's co-moving frame. Without it the
      amplitudes are taken to be co-moving already.
    * ``signal_kinetic``: advection at ``+v_s`` and ``-v_s`` per branch.
    * ``bragg``: coupling ``-β σ_x`` between branches in each signal cell.
    * ``contact``: ``-ηL·δ_w(x)`` with ``x`` the probe-signal separation
      and ``δ_w`` a unit-area hat kernel of half-width ``w``.

    Use :func:`build_two_photon_hamiltonian` to construct one.
    """

    def __init__(self, grid, rates, terms, contact_width):
        self.grid = grid
        self.rates = rates
        self.terms = frozenset(terms)
        self.eta = _real_eta(rates)
        self.width = contact_width
        z = grid.z
        self.separation = z[:, None] - z[None, :]
        self.branch_sign = np.array([1.0, -1.0])

    def has(self, term):
        return term in self.terms

    def kinetic_factors(self, tau):
        """q-space factors of the signal kinetic term over ``tau``."""
        k = self.grid.wavenumbers
        return np.exp(
            -1j * np.multiply.outer(k * self.rates.v_s, self.branch_sign) * tau
        )

    def apply_kinetic(self, c, factors):
        """Apply q-space factors along the signal cell axis."""
        return fft.ifft(fft.fft(c, axis=-2) * factors, axis=-2)

    def apply_bragg(self, c, tau):
        cos = math.cos(self.rates.beta * tau)
        isin = 1j * math.sin(self.rates.beta * tau)
        plus, minus = c[..., 0], c[..., 1]
        return np.stack(
            [cos * plus + isin * minus, isin * plus + cos * minus], -1
        )

    def _kernel(self, x):
        period = self.grid.length
        r = x - period * np.floor(x / period + 0.5)
        return np.clip(1 - np.abs(r) / self.width, 0, None) / self.width

    def _kernel_cdf(self, x):
        period = self.grid.length
        wraps = np.floor(x / period + 0.5)
        return wraps + _hat_cdf((x - wraps * period) / self.width)

    def contact_phase(self, t0, t1):
        """Phase ``ηL∫δ_w(x(t))dt`` over ``[t0, t1]`` per probe/signal cell."""
        strength = self.eta * self.rates.L
        v_p = self.rates.v_p
        if v_p == 0:
            return strength * self._kernel(self.separation) * (t1 - t0)
        return (strength / v_p) * (
            self._kernel_cdf(self.separation + v_p * t1)
            - self._kernel_cdf(self.separation + v_p * t0)
        )

    def averaged_action(self, c, t0, t1):
        """``H̄c``, with the contact term averaged over ``[t0, t1]``.

        ``c`` has shape ``(..., N, N, 2)``.
        """
        result = np.zeros_like(c)
        if self.has("signal_kinetic"):
            k = self.grid.wavenumbers
            energies = np.multiply.outer(k * self.rates.v_s, self.branch_sign)
            result += fft.ifft(fft.fft(c, axis=-2) * energies, axis=-2)
        if self.has("bragg"):
            result += -self.rates.beta * c[..., ::-1]
        if self.has("contact") and t1 > t0:
            rate = self.contact_phase(t0, t1) / (t1 - t0)
            result += -rate[..., None] * c
        return result

    def dense(self, t0, t1):
        """Dense matrix of :meth:`averaged_action` on flattened amplitudes."""
        n = self.grid.n_cells
        dim = 2 * n * n
        basis = np.eye(dim, dtype=complex).reshape(dim, n, n, 2)
        return self.averaged_action(basis, t0, t1).reshape(dim, dim).T


def build_two_photon_hamiltonian(
    grid, rates, terms=ALL_TERMS, contact_width=None
):
    """Build the two-excitation Hamiltonian on ``grid``.

    Arguments:
        grid: The :class:`~kerrtrap.grid.Grid`. Its medium length must equal
            ``rates.L``.
        rates: :class:`~kerrtrap.params.PolaritonRates`; only ``Re(η)``,
            ``β``, ``v_s`` and ``v_p`` are used.
        terms: Subset of :data:`ALL_TERMS`.
        contact_width: Half-width of the contact kernel, default one cell.

    Raises:
        ConfigurationError: On unknown terms, mismatched lengths or a bad
            kernel width.
    """
    unknown = set(terms) - ALL_TERMS
    if unknown:
        raise ConfigurationError(
            f"Unknown Hamiltonian terms: {', '.join(sorted(unknown))}"
        )
    if abs(grid.medium_length - rates.L) > 1e-12 * rates.L:
        raise ConfigurationError(
            f"Grid medium length {grid.medium_length} does not match"
            f" rates.L = {rates.L}"
        )
    width = grid.dz if contact_width is None else contact_width
    if not (0 < width <= grid.length / 2):
        raise ConfigurationError(f"Bad contact kernel width {width}")
    return TwoPhotonHamiltonian(grid, rates, terms, width)


##############
# Evolutions #
##############


def _to_comoving(c, hamiltonian, t, sign):
    if not hamiltonian.has("probe_kinetic") or hamiltonian.rates.v_p == 0:
        return c
    return translate(c, sign * hamiltonian.rates.v_p * t, hamiltonian.grid, 0)


def _steps(T, dt):
    if not (math.isfinite(T) and T >= 0):
        raise ConfigError(f"Evolution time must be nonnegative, got {T}")
    if not (math.isfinite(dt) and dt > 0):
        raise ConfigError(f"Time step must be positive, got {dt}")
    n = max(1, math.ceil(T / dt - 1e-9))
    return n, T / n


def _propagate(
    c, hamiltonian, t0, T, dt, sector, norm_tolerance=1e-10, cadence=None
):
    """Strang-split evolution of amplitudes in one occupation sector.

    ``sector`` is ``"probe"`` (shape ``(N,)``), ``"signal"`` (shape
    ``(N, 2)``) or ``"both"`` (shape ``(N, N, 2)``).
    """
    h = hamiltonian
    n, tau = _steps(T, dt)
    has_probe = sector in ("probe", "both")
    has_signal = sector in ("signal", "both")
    if has_probe:
        c = _to_comoving(c, h, t0, -1)
    norm0 = float(np.sum(np.abs(c) ** 2))
    tolerance = norm_tolerance * max(1.0, n / 1e4)
    cadence = every(100) if cadence is None else cadence

    kinetic = has_signal and h.has("signal_kinetic")
    bragg = has_signal and h.has("bragg")
    contact = sector == "both" and h.has("contact")
    half = h.kinetic_factors(tau / 2) if kinetic else None

    t = t0
    for i in range(1, n + 1):
        if kinetic:
            c = h.apply_kinetic(c, half)
        if bragg:
            c = h.apply_bragg(c, tau)
        if contact:
            c = c * np.exp(1j * h.contact_phase(t, t + tau))[..., None]
        if kinetic:
            c = h.apply_kinetic(c, half)
        t = t0 + i * tau
        if i == n or cadence(i, t):
            norm = float(np.sum(np.abs(c) ** 2))
            give(event="trotter", sector=sector, step=i, t=t, norm=norm)
            if not abs(norm - norm0) <= tolerance:
                raise NormDriftError(
                    f"Norm drifted from {norm0} to {norm} at t = {t}"
                )

    if has_probe:
        c = _to_comoving(c, h, t, 1)
    return c


TRAPPING_RATIO_THRESHOLD = 100.0


def trapping_ratio(grid, rates):
    """Bragg rate over the signal rate ``v_s·π/dz`` of the grid's fastest mode.

    The closed-form output assumes the signal does not move while the probe
    crosses it, which needs this ratio to be large.
    """
    if rates.v_s == 0:
        return math.inf
    return rates.beta / (rates.v_s * math.pi / grid.dz)


def check_trapping(grid, rates, threshold=TRAPPING_RATIO_THRESHOLD):
    """Return :func:`trapping_ratio`, warning when it is below ``threshold``."""
    ratio = trapping_ratio(grid, rates)
    if ratio < threshold:
        warnings.warn(
            f"beta/(v_s*pi/dz) = {ratio:.3g} is below {threshold:g}: the"
            " signal moves while the probe crosses it",
            TrappingRegimeWarning,
        )
    return ratio


def trotter_evolve(
    state, hamiltonian, T, dt, norm_tolerance=1e-10, cadence=None
):
    """Evolve a :class:`TwoPhotonState` for ``T`` with Strang splitting.

    Each step applies half the signal kinetic term, then the Bragg
    rotation and the exactly integrated contact phase, then the other half
    of the kinetic term. Bragg and contact commute. The step is ``T``
    divided into whole steps no longer than ``dt``.

    Raises:
        NormDriftError: If the norm drifts by more than ``norm_tolerance``
            per 10⁴ steps.
    """
    if state.grid != hamiltonian.grid:
        raise ConfigurationError("State and Hamiltonian grids differ")
    if T == 0:
        return state.copy()
    amplitudes = _propagate(
        state.amplitudes,
        hamiltonian,
        state.t,
        T,
        dt,
        "both",
        norm_tolerance=norm_tolerance,
        cadence=cadence,
    )
    return TwoPhotonState(state.grid, amplitudes, state.t + T)


def dense_propagator(hamiltonian, t0, T, dt):
    """Co-moving-frame propagator ``Π_n expm(-iH̄_n τ)`` as a dense matrix.

    ``H̄_n`` is the Hamiltonian with the contact term averaged over step
    ``n``, on the same step subdivision as :func:`trotter_evolve`.
    """
    n, tau = _steps(T, dt)
    dim = 2 * hamiltonian.grid.n_cells ** 2
    U = np.eye(dim, dtype=complex)
    for i in range(n):
        t = t0 + i * tau
        U = expm(-1j * hamiltonian.dense(t, t + tau) * tau) @ U
    return U


def dense_evolve(state, hamiltonian, T, dt):
    """Evolve with :func:`dense_propagator`, including frame changes."""
    if state.grid != hamiltonian.grid:
        raise ConfigurationError("State and Hamiltonian grids differ")
    c = _to_comoving(state.amplitudes, hamiltonian, state.t, -1)
    U = dense_propagator(hamiltonian, state.t, T, dt)
    c = (U @ c.ravel()).reshape(c.shape)
    c = _to_comoving(c, hamiltonian, state.t + T, 1)
    return TwoPhotonState(state.grid, c, state.t + T)


def _free_signal(in_plus, rates, t):
    forward = math.cos(rates.beta * t) * in_plus.envelope()
    backward = 1j * math.sin(rates.beta * t) * (
        in_plus.mirrored().backward_envelope()
    )
    return np.stack([forward, backward], axis=-1)


def _output_amplitudes(in_p, in_plus, rates, t_out, phase, translate_probe):
    probe = in_p.envelope()
    if translate_probe:
        probe = translate(probe, rates.v_p * t_out, in_p.grid)
    signal = _free_signal(in_plus, rates, t_out)
    return np.exp(1j * phase) * probe[:, None, None] * signal[None, :, :]


def closed_form_output(in_p, in_plus, rates, t_out, frame="lab"):
    """Output state after the probe has crossed the trapped signal.

    The state is ``e^{iηL/v_p}|1_p⟩ ⊗ [cos(βt)|1₊⟩ + i·sin(βt)|1₋⟩]``, where
    the backward wavepacket has the mirrored amplitudes ``ξ₊^{-q}``.

    Arguments:
        in_p: Input probe :class:`SinglePhotonWavepacket`.
        in_plus: Input forward signal :class:`SinglePhotonWavepacket`.
        rates: :class:`~kerrtrap.params.PolaritonRates`; only ``Re(η)`` is
            used.
        t_out: Readout time, after ``L/v_p``.
        frame: ``"lab"`` translates the probe by ``v_p·t_out``;
            ``"comoving"`` leaves it in place.

    Raises:
        PrematureReadoutError: If ``t_out <= L/v_p``.
    """
    if in_p.grid != in_plus.grid:
        raise ConfigurationError("Wavepackets live on different grids")
    if frame not in ("lab", "comoving"):
        raise ConfigurationError(f"Unknown frame '{frame}'")
    if rates.v_p <= 0:
        raise ConfigurationError("A closed-form output needs v_p > 0")
    if t_out <= rates.L / rates.v_p:
        raise PrematureReadoutError(
            f"t_out = {t_out} is before the probe leaves the medium"
            f" at L/v_p = {rates.L / rates.v_p}"
        )
    phase = _real_eta(rates) * rates.L / rates.v_p
    amplitudes = _output_amplitudes(
        in_p, in_plus, rates, t_out, phase, frame == "lab"
    )
    return TwoPhotonState(in_p.grid, amplitudes, t_out)


#########
# Gates #
#########

GATE_LABELS = ("00", "01", "10", "11")


@dataclass(frozen=True)
class GateRun:
    """Overlap of an evolved occupation variant with its free evolution.

    Labels give the probe then the signal occupation.
    """

    label: str
    overlap: complex


def run_gate_variants(in_p, in_plus, hamiltonian, T, dt):
    """Evolve the four occupation variants and compare to free evolution.

    The free reference has no contact phase and neglects signal motion; the
    single-excitation runs absorb what the reference misses, so it cancels
    in :func:`conditional_phase_extract`.

    Returns:
        A dict from label to :class:`GateRun`.
    """
    h = hamiltonian
    moving = h.has("probe_kinetic")
    reference = _output_amplitudes(in_p, in_plus, h.rates, T, 0.0, moving)
    probe = in_p.envelope()
    signal = np.stack(
        [in_plus.envelope(), np.zeros(h.grid.n_cells, dtype=complex)], -1
    )

    runs = {"00": GateRun("00", 1 + 0j)}
    evolved_probe = _propagate(probe, h, 0.0, T, dt, "probe")
    ref_probe = translate(probe, h.rates.v_p * T, h.grid) if moving else probe
    runs["10"] = GateRun("10", complex(np.vdot(ref_probe, evolved_probe)))

    evolved_signal = _propagate(signal, h, 0.0, T, dt, "signal")
    ref_signal = _free_signal(in_plus, h.rates, T)
    runs["01"] = GateRun("01", complex(np.vdot(ref_signal, evolved_signal)))

    product = np.multiply.outer(probe, signal)
    evolved_both = _propagate(product, h, 0.0, T, dt, "both")
    runs["11"] = GateRun("11", complex(np.vdot(reference, evolved_both)))
    for run in runs.values():
        give(event="gate_run", label=run.label, overlap=run.overlap)
    return runs


def conditional_phase_extract(runs, min_overlap=1e-3):
    """Conditional phase ``arg o₁₁ - arg o₁₀ - arg o₀₁ + arg o₀₀``.

    Returns:
        The phase in ``[0, 2π)``.

    Raises:
        IllConditionedError: If any overlap has modulus below
            ``min_overlap``.
    """
    missing = [label for label in GATE_LABELS if label not in runs]
    if missing:
        raise ConfigurationError(f"Missing gate runs: {', '.join(missing)}")
    for label in GATE_LABELS:
        if abs(runs[label].overlap) < min_overlap:
            raise IllConditionedError(
                f"Overlap of run {label} is {abs(runs[label].overlap):.3g},"
                f" below {min_overlap}"
            )
    args = {label: np.angle(runs[label].overlap) for label in GATE_LABELS}
    phase = args["11"] - args["10"] - args["01"] + args["00"]
    return float(wrap_phase(phase))


def gate_matrix(runs):
    """Diagonal gate in the basis ``|00⟩, |01⟩, |10⟩, |11⟩``."""
    return np.diag([runs[label].overlap for label in GATE_LABELS])


def gate_distance(U, phi):
    """Distance from ``U`` to ``diag(1, 1, 1, e^{iφ})`` up to global phase.

    The global phase is ``arg tr(D†U)``; the distance is the largest
    entrywise modulus of the difference.
    """
    target = np.diag([1, 1, 1, np.exp(1j * phi)])
    alpha = np.angle(np.trace(target.conj().T @ U))
    return float(np.max(np.abs(U - np.exp(1j * alpha) * target)))
