"""Run orchestration: scenarios in, reports out."""

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, Optional

import numpy as np
from giving import give

from .dynamics import DEFAULT_OBSERVERS, evolve, init_state, probe_phase_shift
from .envelopes import gaussian
from .grid import Grid
from .oracles import accumulated_probe_phase
from .params import (
    CONSTRAINT_NAMES,
    ConstraintReport,
    DerivedRates,
    PolaritonRates,
    derive_rates,
    validate_constraints,
)
from .quantum import (
    SinglePhotonWavepacket,
    TwoPhotonState,
    build_two_photon_hamiltonian,
    check_trapping,
    closed_form_output,
    conditional_phase_extract,
    gate_distance,
    gate_matrix,
    run_gate_variants,
    trotter_evolve,
)
from .scenario import (
    Scenario,
    apply_path,
    scenario_to_dict,
    serialize_scenario,
)
from .utils import ConfigError, NumericalError, wrap_phase
from .version import version

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONSTRAINTS = 3
EXIT_NUMERICAL = 4


def exit_code_for(exc):
    """Exit code for an exception raised while running."""
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, NumericalError):
        return EXIT_NUMERICAL
    raise exc


@dataclass(eq=False)
class RunReport:
    """Everything a run produced.

    Attributes:
        scenario: The resolved scenario, enough to rerun.
        derived: Derived rates in physical units.
        constraints: The validity constraints.
        rates: The desk-unit rates the numerical runs used.
        observables: Scalar results by name.
        tables: Named tables ``{"columns": [...], "rows": [[...], ...]}``.
        plot_table: Name of the table written as plot data, if any.
        provenance: Version, timestamp and scenario hash.
    """

    scenario: Scenario
    derived: DerivedRates
    constraints: ConstraintReport
    rates: PolaritonRates
    observables: Dict[str, Any] = field(default_factory=dict)
    tables: Dict[str, dict] = field(default_factory=dict)
    plot_table: Optional[str] = None
    provenance: Dict[str, str] = field(default_factory=dict)

    def exit_code(self, strict_constraints=False):
        if strict_constraints and not self.constraints.all_passed:
            return EXIT_CONSTRAINTS
        return EXIT_OK

    def to_dict(self):
        rates = asdict(self.rates)
        rates["eta"] = [self.rates.eta.real, self.rates.eta.imag]
        return {
            "scenario": scenario_to_dict(self.scenario),
            "mode": self.scenario.mode,
            "derived": self.derived.to_dict(),
            "constraints": self.constraints.to_dict(),
            "rates": rates,
            "observables": dict(self.observables),
            "tables": dict(self.tables),
            "provenance": dict(self.provenance),
        }


def config_hash(scenario):
    """SHA-256 of the serialized scenario."""
    text = serialize_scenario(scenario)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def desk_rates(scenario, derived):
    """Desk-unit rates with the caps and overrides of ``scenario``."""
    rates = derived.desk_rates(
        max_signal_velocity=scenario.desk.max_signal_velocity,
        max_bragg_rate=scenario.desk.max_bragg_rate,
    )
    overrides = dict(scenario.rate_overrides)
    if not overrides:
        return rates
    eta = complex(
        overrides.pop("eta_re", rates.eta.real),
        overrides.pop("eta_im", rates.eta.imag),
    )
    return rates.replace(eta=eta, **overrides)


def _table(columns, rows):
    return {"columns": list(columns), "rows": [list(r) for r in rows]}


def _transit(rates, duration):
    return duration * rates.L / rates.v_p if rates.v_p > 0 else duration


def _design_tables(scenario, rates):
    grid = Grid(
        scenario.grid.n_cells, scenario.grid.length_factor * rates.L, rates.L
    )
    signal = init_state(
        grid,
        None,
        scenario.pulses["signal"].envelope(),
        normalize=scenario.pulses["signal"].normalize,
    )
    phase = accumulated_probe_phase(signal.signal_intensity, grid, rates)
    rows = zip(grid.z, signal.signal_intensity, phase.real, -phase.imag)
    return _table(
        ["z", "signal_intensity", "probe_phase", "log_attenuation"],
        ([float(x) for x in row] for row in rows),
    )


def run_classical(scenario, rates):
    """Evolve the classical fields and measure the probe phase.

    Returns:
        ``(observables, tables)``.
    """
    grid = Grid(
        scenario.grid.n_cells, scenario.grid.length_factor * rates.L, rates.L
    )
    probe, signal = scenario.pulses["probe"], scenario.pulses["signal"]
    state = init_state(
        grid,
        probe.envelope(),
        signal.envelope(),
        normalize=(probe.normalize, signal.normalize),
    )
    observers = {
        name: DEFAULT_OBSERVERS[name] for name in scenario.outputs.observables
    }
    trajectory = evolve(
        state,
        rates,
        scenario.integrator,
        _transit(rates, scenario.duration),
        observers=observers,
    )
    final = trajectory.final
    profile = probe_phase_shift(state, final, rates)
    cells = np.flatnonzero(profile.support)
    rows = (
        [
            float(grid.z[j]),
            float(final.probe_intensity[j]),
            float(profile.phase[j]),
            float(final.signal_intensity[j]),
        ]
        for j in cells
    )
    observables = {
        "probe_phase": profile.mean,
        "probe_phase_deviation": profile.max_deviation,
        "probe_norm": final.probe_norm,
        "signal_norm": final.signal_norm,
        "steps": trajectory.steps[-1],
    }
    tables = {
        "trajectory": trajectory.as_table(),
        "probe_phase": _table(
            ["z", "probe_intensity", "probe_phase", "signal_intensity"], rows
        ),
    }
    return observables, tables


def run_quantum(scenario, rates):
    """Two-photon closed form, plus the Trotter oracle when requested.

    Returns:
        ``(observables, tables)``.
    """
    q = scenario.quantum
    L = rates.L
    grid = Grid(q.n_cells, q.length_factor * L, L)
    in_p = SinglePhotonWavepacket.from_envelope(
        grid, gaussian(q.probe_center * L, q.width * L)
    )
    in_s = SinglePhotonWavepacket.from_envelope(
        grid, gaussian(q.signal_center * L, q.width * L)
    )
    t_out = _transit(rates, q.duration)
    ratio = check_trapping(grid, rates)
    closed = closed_form_output(in_p, in_s, rates, t_out)
    expected = float(wrap_phase(rates.eta.real * L / rates.v_p))
    forward, backward = closed.branch_populations()
    observables = {
        "phi_closed_form": expected,
        "dropped_eta_imag": rates.eta.imag,
        "forward_population": forward,
        "backward_population": backward,
        "trapping_ratio": ratio,
    }
    tables = {}
    if q.oracle:
        hamiltonian = build_two_photon_hamiltonian(grid, rates)
        evolved = trotter_evolve(
            TwoPhotonState.product(in_p, in_s), hamiltonian, t_out, q.dt
        )
        runs = run_gate_variants(in_p, in_s, hamiltonian, t_out, q.dt)
        observables["fidelity"] = closed.fidelity(evolved)
        observables["conditional_phase"] = conditional_phase_extract(runs)
        observables["gate_distance"] = gate_distance(
            gate_matrix(runs), expected
        )
        tables["gate"] = _table(
            ["label", "overlap_re", "overlap_im", "modulus", "phase"],
            (
                [
                    run.label,
                    run.overlap.real,
                    run.overlap.imag,
                    abs(run.overlap),
                    float(np.angle(run.overlap)),
                ]
                for run in runs.values()
            ),
        )
        weights = np.abs(evolved.amplitudes) ** 2
        probe = weights.sum(axis=(1, 2))
        signal = weights.sum(axis=0)
        tables["marginals"] = _table(
            ["z", "probe", "signal_forward", "signal_backward"],
            (
                [float(z), float(p), float(f), float(b)]
                for z, p, (f, b) in zip(grid.z, probe, signal)
            ),
        )
    return observables, tables


def run(scenario):
    """Run ``scenario`` according to its mode.

    Design-only runs derive the rates and check the constraints. Classical
    runs also evolve the fields; quantum runs also build the two-photon
    output state.

    Raises:
        ConfigError: On invalid inputs.
        NumericalError: On numerical failures.
    """
    derived = derive_rates(scenario.params)
    constraints = validate_constraints(
        scenario.params,
        derived,
        ratio_threshold=scenario.constraints.ratio_threshold,
        bragg_tolerance=scenario.constraints.bragg_tolerance,
    )
    rates = desk_rates(scenario, derived)
    observables = {"phi": derived.phi, "F": derived.F}
    tables = {
        "constraints": _table(
            ["name", "value", "bound", "sense", "passed", "margin"],
            (
                [c.name, c.value, c.bound, c.sense, c.passed, c.margin]
                for c in constraints
            ),
        ),
    }
    plot_table = None
    if scenario.mode == "design-only":
        tables["phase_profile"] = _design_tables(scenario, rates)
        plot_table = "phase_profile"
    elif scenario.mode == "classical":
        more, extra = run_classical(scenario, rates)
        observables.update(more)
        tables.update(extra)
        plot_table = "probe_phase"
    else:
        more, extra = run_quantum(scenario, rates)
        observables.update(more)
        tables.update(extra)
        plot_table = "marginals" if "marginals" in extra else None

    give(event="run", mode=scenario.mode, **observables)
    return RunReport(
        scenario=scenario,
        derived=derived,
        constraints=constraints,
        rates=rates,
        observables=observables,
        tables=tables,
        plot_table=plot_table,
        provenance={
            "version": version,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "config_hash": config_hash(scenario),
        },
    )


##########
# Sweeps #
##########


def _sweep_cell(job):
    scenario, spec, values = job
    n_targets = len(spec.targets) + len(CONSTRAINT_NAMES) + 1
    try:
        cell = scenario.replace(mode=spec.mode)
        for axis, value in zip(spec.axes, values):
            cell = apply_path(cell, axis.path, value)
        report = run(cell)
    except (ConfigError, NumericalError) as exc:
        return [*values, *([None] * n_targets), f"{type(exc).__name__}: {exc}"]
    margins = report.constraints.margins
    return [
        *values,
        *(getattr(report.derived, t) for t in spec.targets),
        *(margins[name] for name in CONSTRAINT_NAMES),
        report.constraints.all_passed,
        "",
    ]


def sweep(scenario, spec):
    """Run every cell of a sweep and tabulate the targets.

    Cells are independent. With ``spec.workers > 1`` they run on a process
    pool; rows always come back in cell order. A failing cell is recorded
    with its error message and the sweep goes on.

    Returns:
        A table with one column per axis, per target and per constraint
        margin, then ``all_passed`` and ``error``.
    """
    cells = spec.cells()
    jobs = [(scenario, spec, values) for values in cells]
    if spec.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as ex:
            rows = list(ex.map(_sweep_cell, jobs))
    else:
        rows = [_sweep_cell(job) for job in jobs]
    for i, row in enumerate(rows):
        give(event="sweep_cell", index=i, values=cells[i], error=row[-1])
    columns = [
        *(axis.path for axis in spec.axes),
        *spec.targets,
        *(f"margin_{name}" for name in CONSTRAINT_NAMES),
        "all_passed",
        "error",
    ]
    return _table(columns, rows)
