"""Closed-form solutions of the polariton equations.

These evaluate the analytic solutions exactly. They serve as test oracles
for the integrators and as fast evaluators for design scenarios. None of
them couple signal and probe self-consistently: the accumulated phases are
supplied by the caller.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import fft

from .grid import midpoint
from .params import DEFAULT_RATIO_THRESHOLD, DomainError
from .utils import ConfigError, PhysicsWarning


class OutsideTrappingError(ConfigError, ValueError):
    """A wavevector lies outside the trapping band ``|q| < β/v_s``."""


class TrappingRegimeWarning(PhysicsWarning):
    """The signal bandwidth is not small against ``β/v_s``."""


@dataclass(frozen=True)
class ModeSolution:
    """Forward and backward amplitudes of one signal Fourier mode.

    The backward amplitude uses the ``e^{-iqz}`` convention, so it is seeded
    by the forward amplitude of the mirrored mode ``-q``.
    """

    q: float
    chi: float
    psi_plus: complex
    psi_minus: complex


def _sinc_t(chi, t):
    """``sin(χt)/χ``, equal to ``t`` when ``χ = 0``."""
    chi = np.asarray(chi, dtype=float)
    safe = np.where(chi == 0, 1.0, chi)
    return np.where(chi == 0, t, np.sin(safe * t) / safe)


def signal_mode_solution(
    psi_plus_0, q, t, rates, phi_s=0.0, psi_plus_0_mirror=None
):
    """Evolve one Fourier mode of the signal.

    Arguments:
        psi_plus_0: Forward amplitude ``ψ₊(q, 0)``.
        q: Mode wavevector.
        t: Time.
        rates: :class:`~kerrtrap.params.PolaritonRates`.
        phi_s: Phase accumulated from the probe, ``η∫I_p dt'``.
        psi_plus_0_mirror: Forward amplitude ``ψ₊(-q, 0)`` of the mirrored
            mode, which seeds the backward wave. Defaults to ``psi_plus_0``.
    """
    if psi_plus_0_mirror is None:
        psi_plus_0_mirror = psi_plus_0
    chi = math.sqrt((q * rates.v_s) ** 2 + rates.beta ** 2)
    s = float(_sinc_t(chi, t))
    rot = np.exp(1j * phi_s)
    return ModeSolution(
        q=q,
        chi=chi,
        psi_plus=complex(
            psi_plus_0 * rot * (math.cos(chi * t) - 1j * q * rates.v_s * s)
        ),
        psi_minus=complex(1j * psi_plus_0_mirror * rot * rates.beta * s),
    )


def signal_envelope_solution(psi_plus_initial, grid, t, rates, phi_s=0.0):
    """Evolve a sampled forward envelope with every mode solved exactly.

    The backward wave starts empty. Returns ``(Ψ₊, Ψ₋)`` on ``grid``.
    """
    values = grid.check(np.asarray(psi_plus_initial, dtype=complex))
    q = grid.wavenumbers
    chi = np.sqrt((q * rates.v_s) ** 2 + rates.beta ** 2)
    s = _sinc_t(chi, t)
    coeffs = fft.fft(values) * np.exp(1j * phi_s)
    plus = coeffs * (np.cos(chi * t) - 1j * q * rates.v_s * s)
    # The e^{-iqz} seeding by ψ₊(-q) is the ordinary e^{iqz} coefficient.
    minus = coeffs * 1j * rates.beta * s
    return fft.ifft(plus), fft.ifft(minus)


def trapped_signal(
    z,
    t,
    psi_plus_initial,
    rates,
    phi_s=0.0,
    bandwidth=None,
    ratio_threshold=DEFAULT_RATIO_THRESHOLD,
):
    """Trapped signal cycling between its forward and backward components.

    Arguments:
        z: Positions.
        t: Time.
        psi_plus_initial: Initial forward envelope, as a callable or as
            samples at ``z``.
        rates: :class:`~kerrtrap.params.PolaritonRates`.
        phi_s: Phase accumulated from the probe.
        bandwidth: Spectral width of the envelope, if known. A warning is
            issued when it is not small against ``β/v_s``.

    Returns:
        ``(Ψ₊, Ψ₋)`` at ``(z, t)``.
    """
    if bandwidth is not None and bandwidth * rates.v_s * ratio_threshold >= (
        rates.beta
    ):
        warnings.warn(
            f"Signal bandwidth {bandwidth} is not small against"
            f" beta/v_s = {rates.beta / rates.v_s if rates.v_s else math.inf}",
            TrappingRegimeWarning,
        )
    if callable(psi_plus_initial):
        initial = np.asarray(psi_plus_initial(z), dtype=complex)
    else:
        initial = np.asarray(psi_plus_initial, dtype=complex)
    base = initial * np.exp(1j * phi_s)
    return (
        base * math.cos(rates.beta * t),
        1j * base * math.sin(rates.beta * t),
    )


def probe_solution(
    z, t, probe_boundary, I_s_profile, rates, panels=256
):
    """Probe envelope in the absorption-free regime.

    The boundary value at the retarded time ``τ = t - z/v_p`` is advanced by
    the phase ``(η/v_p)∫₀^z I_s dz'``, computed by the midpoint rule.

    Arguments:
        z: Positions in ``[0, L]``, scalar or array.
        t: Time.
        probe_boundary: Callable ``τ ↦ complex``, the probe at ``z = 0``.
        I_s_profile: Callable ``z ↦ real`` signal intensity. It must accept
            numpy arrays.
        rates: :class:`~kerrtrap.params.PolaritonRates`.
        panels: Number of midpoint panels.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(z > rates.L):
        raise DomainError(f"probe_solution needs 0 <= z <= L = {rates.L}")
    integral = midpoint(I_s_profile, 0.0, z, panels)
    phase = rates.eta / rates.v_p * integral
    result = probe_boundary(t - z / rates.v_p) * np.exp(1j * phase)
    return result if np.ndim(result) else complex(result)


def accumulated_probe_phase(I_s, grid, rates):
    """Complex phase ``(η/v_p)∫₀^z I_s`` at each cell center.

    The real part is the probe phase, the imaginary part the log of its
    attenuation from cross-absorption.
    """
    I_s = grid.check(np.asarray(I_s, dtype=float))
    integral = (np.cumsum(I_s) - I_s / 2) * grid.dz
    return rates.eta / rates.v_p * integral


def distortion_rate(q, rates):
    """Spreading rate ``q²v_s²/(πβ)`` of a trapped mode.

    Raises:
        OutsideTrappingError: If ``|q| >= β/v_s``.
    """
    if abs(q) * rates.v_s >= rates.beta:
        raise OutsideTrappingError(
            f"|q| = {abs(q)} is outside the trapping band beta/v_s"
        )
    return q * q * rates.v_s ** 2 / (math.pi * rates.beta)
