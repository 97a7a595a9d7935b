import math
import re

import pytest

from kerrtrap.oracles import TrappingRegimeWarning
from kerrtrap.params import CONSTRAINT_NAMES, ValidationError
from kerrtrap.presets import PAPER_SEC3
from kerrtrap.quantum import DroppedLossWarning
from kerrtrap.runner import (
    EXIT_CONFIG,
    EXIT_CONSTRAINTS,
    EXIT_NUMERICAL,
    EXIT_OK,
    config_hash,
    desk_rates,
    exit_code_for,
    run,
    sweep,
)
from kerrtrap.scenario import (
    DeskSpec,
    GridSpec,
    QuantumSpec,
    Scenario,
    SweepAxis,
    SweepSpec,
)
from kerrtrap.utils import NumericalError

from .common import check_golden, events

LOSSLESS = {"eta_im": 0.0, "kappa_s": 0.0, "kappa_p": 0.0}
GATE = {**LOSSLESS, "v_s": 0.02, "beta": 500.0, "eta_re": math.pi}

design = run(Scenario())


def test_design_only():
    assert abs(design.observables["phi"] - math.pi) / math.pi <= 0.15
    assert 0.95 <= design.observables["F"] <= 0.99
    assert design.constraints.all_passed
    assert design.exit_code(strict_constraints=True) == EXIT_OK
    assert design.plot_table == "phase_profile"
    assert set(design.tables) == {"constraints", "phase_profile"}
    assert len(design.tables["constraints"]["rows"]) == len(CONSTRAINT_NAMES)


def test_design_phase_profile():
    table = design.tables["phase_profile"]
    assert table["columns"] == [
        "z",
        "signal_intensity",
        "probe_phase",
        "log_attenuation",
    ]
    assert len(table["rows"]) == Scenario().grid.n_cells
    last = table["rows"][-1]
    assert last[2] == pytest.approx(design.rates.phi, rel=1e-6)
    assert last[3] == pytest.approx(-design.rates.eta.imag, rel=1e-6)


def test_design_rates():
    rates = design.rates
    assert rates.v_s == 0.05
    assert rates.beta == 500.0
    assert rates.v_p == 1.0
    assert rates.L == 1.0
    assert rates.phi == pytest.approx(design.derived.phi, rel=1e-12)


def test_provenance():
    assert re.fullmatch("[0-9a-f]{64}", design.provenance["config_hash"])
    assert design.provenance["config_hash"] == config_hash(Scenario())
    assert config_hash(Scenario(mode="classical")) != config_hash(Scenario())


def test_to_dict():
    data = design.to_dict()
    assert data["mode"] == "design-only"
    eta = design.rates.eta
    assert data["rates"]["eta"] == [eta.real, eta.imag]
    assert data["observables"]["phi"] == design.derived.phi
    assert data["scenario"]["preset"] == "paper-sec3"


def test_desk_rates_overrides():
    scenario = Scenario(rate_overrides={"eta_re": 1.0, "v_s": 0.01})
    rates = desk_rates(scenario, design.derived)
    assert rates.eta == complex(1.0, design.rates.eta.imag)
    assert rates.v_s == 0.01
    assert rates.beta == design.rates.beta


def test_desk_rates_uncapped():
    scenario = Scenario(desk=DeskSpec(None, None))
    rates = desk_rates(scenario, design.derived)
    assert rates.v_s == pytest.approx(
        design.derived.v_s * design.derived.t_int / PAPER_SEC3.L
    )


def _classical(overrides, n_cells=256):
    return run(
        Scenario(
            mode="classical",
            grid=GridSpec(n_cells, 3.0),
            rate_overrides=overrides,
        )
    )


def test_classical_without_interaction():
    report = _classical({"eta_re": 0.0, "eta_im": 0.0})
    assert abs(report.observables["probe_phase"]) <= 1e-9
    assert report.plot_table == "probe_phase"
    assert report.observables["steps"] == 1600


def test_classical_phase():
    report = _classical(LOSSLESS, n_cells=512)
    phi = report.rates.phi
    assert abs(report.observables["probe_phase"] - phi) / phi <= 0.02
    assert report.observables["probe_phase_deviation"] <= 1e-3 * phi
    assert report.observables["probe_norm"] == pytest.approx(1.0, abs=1e-9)
    assert report.observables["signal_norm"] == pytest.approx(1.0, abs=1e-9)


def test_classical_phase_above_pi():
    report = _classical({**LOSSLESS, "eta_re": 4.0}, n_cells=512)
    assert report.rates.phi == pytest.approx(4.0)
    assert abs(report.observables["probe_phase"] - 4.0) / 4.0 <= 0.02


def test_classical_tables():
    report = _classical({})
    trajectory = report.tables["trajectory"]
    assert trajectory["columns"][0] == "t"
    assert trajectory["rows"][-1][0] == pytest.approx(1.6)
    assert report.tables["probe_phase"]["columns"] == [
        "z",
        "probe_intensity",
        "probe_phase",
        "signal_intensity",
    ]
    assert report.observables["probe_norm"] < 1.0


def test_quantum():
    report = run(Scenario(mode="quantum", rate_overrides=GATE))
    obs = report.observables
    assert obs["fidelity"] >= 0.999
    assert abs(obs["conditional_phase"] - math.pi) <= 0.02 * math.pi
    assert obs["gate_distance"] <= 1e-2
    assert obs["phi_closed_form"] == pytest.approx(math.pi)
    assert obs["dropped_eta_imag"] == 0.0
    assert obs["trapping_ratio"] >= 100
    assert report.plot_table == "marginals"
    assert len(report.tables["gate"]["rows"]) == 4
    assert len(report.tables["marginals"]["rows"]) == QuantumSpec().n_cells


def test_quantum_outside_trapping_regime():
    scenario = Scenario(
        mode="quantum",
        rate_overrides={**GATE, "beta": 20.0},
        quantum=QuantumSpec(oracle=False),
    )
    with pytest.warns(TrappingRegimeWarning):
        report = run(scenario)
    assert report.observables["trapping_ratio"] == pytest.approx(
        20.0 / (0.02 * 16 * math.pi)
    )


def test_quantum_preset_drops_losses():
    scenario = Scenario(mode="quantum", quantum=QuantumSpec(oracle=False))
    with pytest.warns(DroppedLossWarning):
        report = run(scenario)
    assert report.observables["dropped_eta_imag"] > 0
    assert "fidelity" not in report.observables
    assert report.plot_table is None
    assert report.observables["forward_population"] + report.observables[
        "backward_population"
    ] == pytest.approx(1.0)


def test_run_event():
    with events("run", "mode") as modes:
        run(Scenario())
    assert modes == ["design-only"]


def test_strict_constraints():
    report = run(Scenario(params=PAPER_SEC3.replace(T_in=1e-9)))
    assert report.exit_code() == EXIT_OK
    assert report.exit_code(strict_constraints=True) == EXIT_CONSTRAINTS


def test_exit_code_for():
    assert exit_code_for(ValidationError(["L"])) == EXIT_CONFIG
    assert exit_code_for(NumericalError("boom")) == EXIT_NUMERICAL
    with pytest.raises(KeyError):
        exit_code_for(KeyError("other"))


def _column(table, name):
    index = table["columns"].index(name)
    return [row[index] for row in table["rows"]]


def test_sweep_columns():
    spec = SweepSpec(axes=(SweepAxis("params.L_cm", (PAPER_SEC3.L,)),))
    table = sweep(Scenario(), spec)
    assert table["columns"][:3] == ["params.L_cm", "phi", "F"]
    assert table["columns"][-2:] == ["all_passed", "error"]
    assert len(table["columns"]) == 3 + len(CONSTRAINT_NAMES) + 2
    assert table["rows"][0][1] == design.derived.phi
    assert table["rows"][0][-1] == ""


def test_sweep_drive_trend():
    values = (1e7, 2e7, 4e7, 8e7)
    spec = SweepSpec(axes=(SweepAxis("params.Omega_dB_rad_per_s", values),))
    phis = _column(sweep(Scenario(), spec), "phi")
    products = [phi * v ** 2 for phi, v in zip(phis, values)]
    assert products == pytest.approx([products[0]] * 4, rel=1e-12)


def test_sweep_detuning_trend():
    values = (5e8, 1e9, 3e9)
    spec = SweepSpec(axes=(SweepAxis("params.Delta_B_rad_per_s", values),))
    phis = _column(sweep(Scenario(), spec), "phi")
    products = [phi * v for phi, v in zip(phis, values)]
    assert products == pytest.approx([products[0]] * 3, rel=1e-12)


def test_sweep_failing_cell():
    spec = SweepSpec(axes=(SweepAxis("params.L_cm", (-1.0, PAPER_SEC3.L)),))
    with events("sweep_cell", "error") as errors:
        table = sweep(Scenario(), spec)
    bad, good = table["rows"]
    assert bad[-1].startswith("ValidationError")
    assert bad[1:-1] == [None] * (len(bad) - 2)
    assert good[-1] == ""
    assert errors == [bad[-1], ""]


def _golden_spec(workers=1):
    return SweepSpec(
        axes=(
            SweepAxis("params.rho_B_per_cm3", (5e11, 1e12, 2e12)),
            SweepAxis("params.Omega_dA_rad_per_s", (2.5e8, 5e8, 1e9)),
        ),
        workers=workers,
    )


def test_sweep_golden():
    table = sweep(Scenario(), _golden_spec())
    check_golden(
        "sweep_rhoB_OmegadA", {"rows": [row[:4] for row in table["rows"]]}
    )


def test_sweep_workers():
    serial = sweep(Scenario(), _golden_spec())
    parallel = sweep(Scenario(), _golden_spec(workers=2))
    assert parallel == serial
