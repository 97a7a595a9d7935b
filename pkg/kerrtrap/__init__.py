from .dynamics import (
    FieldState,
    IntegratorSettings,
    evolve,
    init_state,
    probe_phase_shift,
    step,
)
from .grid import Grid
from .oracles import probe_solution, signal_mode_solution, trapped_signal
from .params import (
    DerivedRates,
    PhysicalParams,
    PolaritonRates,
    approx_phase,
    derive_rates,
    validate_constraints,
)
from .presets import get_preset
from .quantum import (
    SinglePhotonWavepacket,
    TwoPhotonState,
    build_two_photon_hamiltonian,
    closed_form_output,
    conditional_phase_extract,
    trotter_evolve,
)
from .runner import RunReport, run, sweep
from .scenario import Scenario, parse_scenario, parse_sweep
from .utils import ConfigError, NumericalError
from .version import version
