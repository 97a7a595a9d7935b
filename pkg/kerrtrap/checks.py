"""Quick self-checks of the integrators against their oracles."""

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import IntegratorSettings, evolve, init_state
from .envelopes import gaussian
from .grid import Grid
from .oracles import signal_envelope_solution
from .params import PolaritonRates
from .quantum import (
    CoherentInput,
    SinglePhotonWavepacket,
    TwoPhotonState,
    build_two_photon_hamiltonian,
    coherent_expectation,
    dense_evolve,
    fock_probe_expectation,
    trotter_evolve,
)


@dataclass(frozen=True)
class OracleCheck:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self):
        return self.error <= self.tolerance


def check_signal_mode():
    """Split-step signal against the exact single-mode solution."""
    grid = Grid(256, 2 * math.pi)
    rates = PolaritonRates(v_s=0.1, v_p=1.0, eta=0.0, beta=1.0)
    state = init_state(grid, None, lambda z: np.exp(1j * z), normalize=False)
    period = 2 * math.pi / math.hypot(rates.v_s, rates.beta)
    trajectory = evolve(
        state, rates, IntegratorSettings(dt=1e-3), period, observers={}
    )
    plus, minus = signal_envelope_solution(state.psi_plus, grid, period, rates)
    final = trajectory.final
    error = np.sqrt(
        np.sum(np.abs(final.psi_plus - plus) ** 2)
        + np.sum(np.abs(final.psi_minus - minus) ** 2)
    ) / np.sqrt(np.sum(np.abs(plus) ** 2 + np.abs(minus) ** 2))
    return OracleCheck("signal_mode", float(error), 1e-6)


def check_two_photon_dense():
    """Trotter evolution against the dense matrix exponential."""
    grid = Grid(8, 1.0)
    rates = PolaritonRates(v_s=0.002, v_p=1.0, eta=1.0, beta=1.0)
    probe = SinglePhotonWavepacket.from_envelope(grid, gaussian(0.25, 0.15))
    signal = SinglePhotonWavepacket.from_envelope(grid, gaussian(0.6, 0.15))
    state = TwoPhotonState.product(probe, signal)
    hamiltonian = build_two_photon_hamiltonian(grid, rates)
    trotter = trotter_evolve(state, hamiltonian, 0.2, 0.01)
    dense = dense_evolve(state, hamiltonian, 0.2, 0.01)
    return OracleCheck("two_photon_dense", 1 - trotter.fidelity(dense), 1e-10)


def check_two_photon_order():
    """Trotter error at a moderate signal speed shrinks as ``dt²``."""
    grid = Grid(16, 1.0)
    rates = PolaritonRates(v_s=0.2, v_p=1.0, eta=1.0, beta=1.0)
    probe = SinglePhotonWavepacket.from_envelope(grid, gaussian(0.25, 0.1))
    signal = SinglePhotonWavepacket.from_envelope(grid, gaussian(0.6, 0.1))
    state = TwoPhotonState.product(probe, signal)
    hamiltonian = build_two_photon_hamiltonian(grid, rates)
    reference = trotter_evolve(state, hamiltonian, 0.2, 2.5e-4).amplitudes
    errors = [
        np.linalg.norm(
            trotter_evolve(state, hamiltonian, 0.2, dt).amplitudes - reference
        )
        for dt in (0.02, 0.01)
    ]
    order = math.log2(errors[0] / errors[1])
    return OracleCheck("two_photon_order", abs(order - 2), 0.5)


def check_coherent_fock():
    """Coherent-state expectation against truncated Fock space."""
    rates = PolaritonRates(v_s=0.05, v_p=1.0, eta=1.0, beta=1.0)
    inp = CoherentInput(
        probe_q=[0.0],
        probe_alpha=[0.8],
        signal_q=[0.0, 2 * math.pi],
        signal_alpha=[0.7, 0.2],
        c=0.1,
    )
    exact = fock_probe_expectation(inp, rates, 1.0, 1.5, cells=3)
    closed, _, _ = coherent_expectation(inp, rates, 1.0, 1.5, panels=3)
    return OracleCheck(
        "coherent_fock", abs(exact.value - closed) / abs(closed), 1e-3
    )


CHECKS = (
    check_signal_mode,
    check_two_photon_dense,
    check_two_photon_order,
    check_coherent_fock,
)


def oracle_checks():
    """Run every check of :data:`CHECKS`."""
    return [check() for check in CHECKS]
