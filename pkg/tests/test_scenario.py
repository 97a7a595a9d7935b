import pytest

from kerrtrap.dynamics import IntegratorSettings
from kerrtrap.envelopes import PulseSpec
from kerrtrap.params import ValidationError
from kerrtrap.presets import PAPER_SEC3
from kerrtrap.scenario import (
    DeskSpec,
    GridSpec,
    PathError,
    Scenario,
    ScenarioError,
    UnknownKeyWarning,
    apply_path,
    check_path,
    load_scenario,
    locate,
    parse_scenario,
    parse_sweep,
    serialize_scenario,
)

from .common import events, one_test_per_assert


def test_defaults():
    scenario = parse_scenario("")
    assert scenario == Scenario()
    assert scenario.params == PAPER_SEC3
    assert scenario.mode == "design-only"
    assert scenario.integrator.dt == 1e-3


def test_full_document():
    scenario = parse_scenario(
        """
        preset = "paper-sec3"
        mode = "classical"

        [params]
        Delta_B_rad_per_s = 2e8
        L_cm = 0.5

        [grid]
        n_cells = 256

        [integrator]
        dt = 2e-3
        scheme = "lie"
        duration = 1.8

        [pulses.probe]
        shape = "sech"
        width = 0.05

        [outputs]
        formats = ["json", "plot-data"]

        [desk]
        max_signal_velocity = false

        [rates]
        eta_im = 0.0
        """
    )
    assert scenario.mode == "classical"
    assert scenario.params.Delta_B == 2e8
    assert scenario.params.L == 0.5
    assert scenario.params.gamma_a == PAPER_SEC3.gamma_a
    assert scenario.grid == GridSpec(256, 3.0)
    assert scenario.integrator == IntegratorSettings(dt=2e-3, scheme="lie")
    assert scenario.duration == 1.8
    assert scenario.pulses["probe"] == PulseSpec("sech", 0.7, 0.05)
    assert scenario.pulses["signal"] == Scenario().pulses["signal"]
    assert scenario.outputs.formats == ("json", "plot-data")
    assert scenario.desk == DeskSpec(None, 500.0)
    assert scenario.rate_overrides == {"eta_im": 0.0}


def test_validation_error():
    with pytest.raises(ValidationError) as info:
        parse_scenario("[params]\nL_cm = -1.0\n")
    assert "L" in info.value.failed


def test_unknown_key():
    with pytest.raises(ScenarioError) as info:
        parse_scenario("[grid]\nn_cells = 64\nbogus = 1\n")
    assert info.value.path == "grid.bogus"
    assert info.value.line == 3
    assert "line 3" in str(info.value)


def test_unknown_key_lax():
    with events("unknown_key", "path") as paths:
        with pytest.warns(UnknownKeyWarning):
            scenario = parse_scenario(
                "[grid]\nn_cells = 64\nbogus = 1\n", lax=True
            )
    assert scenario.grid.n_cells == 64
    assert paths == ["grid.bogus"]


@pytest.mark.parametrize(
    "text,path,line",
    [
        ("[grid]\nn_cells = 'many'\n", "grid.n_cells", 2),
        ("[grid]\nn_cells = 100\n", "grid", 1),
        ("mode = 'fast'\n", "mode", 1),
        ("seed = 1.5\n", "seed", 1),
        ("\n[integrator]\nduration = -1.0\n", "integrator.duration", 3),
        ("[pulses.probe]\nshape = 'square'\n", "pulses.probe.shape", 2),
        ("[pulses]\nprobe = 3\n", "pulses.probe", 2),
        ("[outputs]\nformats = ['pdf']\n", "outputs.formats", 2),
        ("[params]\nL_cm = 'long'\n", "params.L_cm", 2),
        ("[quantum]\noracle = 1\n", "quantum.oracle", 2),
        ("grid = 3\n", "grid", 1),
    ],
)
def test_type_errors(text, path, line):
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text)
    assert info.value.path == path
    assert info.value.line == line


def test_syntax_error():
    with pytest.raises(ScenarioError) as info:
        parse_scenario("mode = 'classical'\n[grid\n")
    assert info.value.line == 2


def test_unknown_preset():
    with pytest.raises(ScenarioError):
        parse_scenario("", preset="nope")
    with pytest.raises(ScenarioError):
        parse_scenario("preset = 'nope'\n")


def test_round_trip():
    scenario = Scenario(
        mode="quantum",
        params=PAPER_SEC3.replace(rho_B=2e12),
        grid=GridSpec(128, 2.5),
        integrator=IntegratorSettings(dt=5e-4, scheme="lie"),
        duration=2.0,
        pulses={
            "probe": PulseSpec("flat-top", 0.6, 0.2, edge=0.01),
            "signal": PulseSpec("sech", 1.4, 0.1, amplitude=2.0),
        },
        desk=DeskSpec(None, 300.0),
        rate_overrides={"v_s": 0.02, "eta_im": 0.0},
    )
    assert parse_scenario(serialize_scenario(scenario)) == scenario


def test_round_trip_defaults():
    assert parse_scenario(serialize_scenario(Scenario())) == Scenario()


def test_load_scenario(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("mode = 'classical'\n", encoding="utf-8")
    assert load_scenario(path).mode == "classical"


@one_test_per_assert
def test_locate():
    assert locate("[a]\nx = 1\n[b]\nx = 2\n", "b.x") == 4
    assert locate("[a]\nx = 1\n[b]\nx = 2\n", "a.x") == 2
    assert locate("[a]\nx = 1\n", "a") == 1
    assert locate("x = 1\n", "x") == 1
    assert locate("x = 1\n", "y") is None
    assert locate("[a.b]\nx = 1\n", "a.b.x") == 2


SWEEP = """
targets = ["phi", "F", "v_s"]
workers = 2

[[axes]]
path = "params.Omega_dB_rad_per_s"
range = {start = 1e7, stop = 1e9, num = 3, scale = "log"}

[[axes]]
path = "params.L_cm"
values = [1.0, 2.0]
"""


def test_parse_sweep():
    sweep = parse_sweep(SWEEP)
    assert sweep.targets == ("phi", "F", "v_s")
    assert sweep.workers == 2
    assert sweep.mode == "design-only"
    assert sweep.axes[0].values == pytest.approx((1e7, 1e8, 1e9))
    assert sweep.axes[1].values == (1.0, 2.0)
    assert sweep.cells()[1] == (1e7, 2.0)
    assert len(sweep.cells()) == 6


def test_linear_range():
    sweep = parse_sweep(
        "[[axes]]\npath = 'grid.length_factor'\n"
        "range = {start = 1.0, stop = 2.0, num = 3}\n"
    )
    assert sweep.axes[0].values == (1.0, 1.5, 2.0)


@pytest.mark.parametrize(
    "text",
    [
        "workers = 2\n",
        "[[axes]]\nvalues = [1.0]\n",
        "[[axes]]\npath = 'params.L_cm'\n",
        "[[axes]]\npath = 'params.L_cm'\nvalues = [1.0]\n"
        "range = {start = 1.0, stop = 2.0, num = 2}\n",
        "[[axes]]\npath = 'params.L_cm'\nvalues = []\n",
        "[[axes]]\npath = 'params.L_cm'\n"
        "range = {start = -1.0, stop = 2.0, num = 2, scale = 'log'}\n",
        "[[axes]]\npath = 'params.L_cm'\nrange = {start = 1.0, num = 2}\n",
        "workers = 0\n[[axes]]\npath = 'params.L_cm'\nvalues = [1.0]\n",
    ],
)
def test_bad_sweep(text):
    with pytest.raises(ScenarioError):
        parse_sweep(text)


@pytest.mark.parametrize(
    "text",
    [
        "[[axes]]\npath = 'params.nope'\nvalues = [1.0]\n",
        "[[axes]]\npath = 'mode'\nvalues = [1.0]\n",
        "targets = ['eta']\n[[axes]]\npath = 'params.L_cm'\nvalues = [1.0]\n",
    ],
)
def test_sweep_path_error(text):
    with pytest.raises(PathError):
        parse_sweep(text)


@one_test_per_assert
def test_check_path():
    assert check_path("params.L_cm") is None
    assert check_path("rates.eta_re") is None
    assert check_path("pulses.probe.width") is None
    assert check_path("quantum.n_cells") is None


@pytest.mark.parametrize(
    "path",
    ["pulses.probe.shape", "quantum.oracle", "grid", "params.L", "x.y.z"],
)
def test_check_path_errors(path):
    with pytest.raises(PathError):
        check_path(path)


def test_apply_path():
    base = Scenario()
    assert apply_path(base, "grid.n_cells", 256.0).grid.n_cells == 256
    assert apply_path(base, "params.L_cm", 2.0).params.L == 2.0
    assert apply_path(base, "rates.v_s", 0.1).rate_overrides == {"v_s": 0.1}
    assert apply_path(base, "pulses.probe.width", 0.2).pulses[
        "probe"
    ].width == 0.2
    assert base == Scenario()


def test_apply_path_validates():
    with pytest.raises(ValidationError):
        apply_path(Scenario(), "params.L_cm", -1.0)
