"""Scenario documents.

A scenario is a TOML document. Physical inputs carry their units in their
key names and default to a built-in preset::

    preset = "paper-sec3"
    mode = "classical"

    [params]
    Delta_B_rad_per_s = 2e8

    [grid]
    n_cells = 1024

    [pulses.probe]
    shape = "sech"
    center = 0.7
    width = 0.05

Unknown keys are rejected with a :class:`ScenarioError` that carries the
dotted path and the line of the key, unless parsing is lax, in which case
they are dropped with a warning.
"""

import itertools
import math
import re
import warnings
from dataclasses import dataclass, field, fields, replace
from typing import Dict, Optional, Tuple

import numpy as np
import toml
from giving import give

from .dynamics import DEFAULT_OBSERVERS, IntegratorSettings
from .envelopes import SHAPES, PulseSpec
from .grid import Grid
from .params import (
    DEFAULT_BRAGG_TOLERANCE,
    DEFAULT_RATIO_THRESHOLD,
    DerivedRates,
    PhysicalParams,
    ValidationError,
)
from .presets import get_preset
from .utils import ConfigError

MODES = ("classical", "quantum", "design-only")
FORMATS = ("json", "csv", "plot-data")
DEFAULT_PRESET = "paper-sec3"

# TOML key -> PhysicalParams field
PARAM_KEYS = {
    "L_cm": "L",
    "S_cm2": "S",
    "rho_A_per_cm3": "rho_A",
    "rho_B_per_cm3": "rho_B",
    "omega_p_rad_per_s": "omega_p",
    "omega_signal_rad_per_s": "omega_signal",
    "Omega_dA_rad_per_s": "Omega_dA",
    "Omega_dA_prime_rad_per_s": "Omega_dA_prime",
    "Omega_dB_rad_per_s": "Omega_dB",
    "Delta_B_rad_per_s": "Delta_B",
    "gamma_a_per_s": "gamma_a",
    "gamma_d_per_s": "gamma_d",
    "gamma_bc_per_s": "gamma_bc",
    "delta_omega_PBG_rad_per_s": "delta_omega_PBG",
    "p_s_cm": "p_s",
    "T_in_s": "T_in",
    "T_p_s": "T_p",
    "sigma_abs_A_cm2": "sigma_abs_A",
    "c_cm_per_s": "c",
}

RATE_KEYS = ("v_s", "v_p", "eta_re", "eta_im", "beta", "kappa_s", "kappa_p")


class ScenarioError(ConfigError, ValueError):
    """Malformed scenario document.

    Attributes:
        path: Dotted path of the offending key.
        line: Line of the offending key, if it could be found.
    """

    def __init__(self, message, path="", line=None):
        self.path = path
        self.line = line
        where = f" (at {path}" if path else " ("
        where += f", line {line})" if line else ")"
        super().__init__(message + (where if path or line else ""))


class PathError(ScenarioError):
    """A sweep axis or target names no scenario field."""


class UnknownKeyWarning(UserWarning):
    """A key was dropped while parsing in lax mode."""


@dataclass(frozen=True)
class GridSpec:
    """Classical grid: cell count and domain length in medium lengths."""

    n_cells: int = 1024
    length_factor: float = 3.0

    def __post_init__(self):
        if not self.length_factor >= 1:
            raise ConfigError(
                f"The domain must hold the medium: length_factor ="
                f" {self.length_factor}"
            )
        Grid(self.n_cells, self.length_factor)


@dataclass(frozen=True)
class DeskSpec:
    """Caps applied when converting to desk units."""

    max_signal_velocity: Optional[float] = 0.05
    max_bragg_rate: Optional[float] = 500.0


@dataclass(frozen=True)
class ConstraintSpec:
    ratio_threshold: float = DEFAULT_RATIO_THRESHOLD
    bragg_tolerance: float = DEFAULT_BRAGG_TOLERANCE

    def __post_init__(self):
        if self.ratio_threshold <= 1 or self.bragg_tolerance <= 0:
            raise ConfigError(
                "Constraint thresholds must exceed 1 and 0, got"
                f" {self.ratio_threshold} and {self.bragg_tolerance}"
            )


@dataclass(frozen=True)
class OutputSpec:
    """Observables sampled by classical runs and formats to write."""

    observables: Tuple[str, ...] = tuple(DEFAULT_OBSERVERS)
    formats: Tuple[str, ...] = ("json",)


@dataclass(frozen=True)
class QuantumSpec:
    """Two-photon run: grid, wavepackets and time step, in desk units.

    Wavepackets are Gaussians of rms width ``width``. ``duration`` must
    exceed the probe transit time ``L/v_p``.
    """

    n_cells: int = 32
    length_factor: float = 2.0
    probe_center: float = 0.375
    signal_center: float = 1.0
    width: float = 0.09375
    dt: float = 1e-3
    duration: float = 1.25
    oracle: bool = True

    def __post_init__(self):
        Grid(self.n_cells, self.length_factor)
        for name in ("width", "dt", "duration"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"quantum.{name} must be positive: {value}")


def _default_pulses():
    return {
        "probe": PulseSpec("gaussian", center=0.7, width=0.1),
        "signal": PulseSpec("gaussian", center=1.5, width=0.1),
    }


@dataclass(frozen=True)
class Scenario:
    """A fully resolved run description.

    Attributes:
        preset: Name of the preset the physical inputs default to.
        mode: One of :data:`MODES`.
        seed: Reserved; nothing is random.
        params: The :class:`~kerrtrap.params.PhysicalParams`.
        grid: Classical grid.
        integrator: Classical time stepping.
        duration: Classical evolution time, in interaction times.
        pulses: ``probe`` and ``signal`` :class:`~kerrtrap.envelopes.PulseSpec`.
        outputs: Observables and formats.
        desk: Desk-unit caps.
        constraints: Constraint thresholds.
        quantum: Two-photon run settings.
        rate_overrides: Desk rates replacing the derived ones, keyed by
            :data:`RATE_KEYS`.
    """

    preset: str = DEFAULT_PRESET
    mode: str = "design-only"
    seed: int = 0
    params: PhysicalParams = field(
        default_factory=lambda: get_preset(DEFAULT_PRESET)
    )
    grid: GridSpec = GridSpec()
    integrator: IntegratorSettings = IntegratorSettings(dt=1e-3)
    duration: float = 1.6
    pulses: Dict[str, PulseSpec] = field(default_factory=_default_pulses)
    outputs: OutputSpec = OutputSpec()
    desk: DeskSpec = DeskSpec()
    constraints: ConstraintSpec = ConstraintSpec()
    quantum: QuantumSpec = QuantumSpec()
    rate_overrides: Dict[str, float] = field(default_factory=dict)

    def replace(self, **changes):
        return replace(self, **changes)


###########
# Parsing #
###########


def locate(text, path):
    """Line number of the key at dotted ``path`` in TOML ``text``, or None."""
    *tables, key = path.split(".")
    table = ".".join(tables)
    current = ""
    header = re.compile(r"^\s*\[\[?\s*([^\]]+?)\s*\]\]?\s*(#.*)?$")
    assignment = re.compile(r"^\s*\"?([A-Za-z0-9_\-]+)\"?\s*=")
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = header.match(line)
        if m:
            current = m.group(1)
            if current == path:
                return lineno
            continue
        m = assignment.match(line)
        if m and m.group(1) == key and current == table:
            return lineno
    return None


class _Reader:
    """Typed access to a parsed TOML document, with located errors."""

    def __init__(self, text, lax):
        self.text = text
        self.lax = lax

    def error(self, message, path, cls=ScenarioError):
        return cls(message, path=path, line=locate(self.text, path))

    def section(self, data, path, allowed):
        """Return the table at ``path`` after checking its keys."""
        if not isinstance(data, dict):
            raise self.error(f"Expected a table at '{path}'", path)
        result = {}
        for key, value in data.items():
            sub = f"{path}.{key}" if path else key
            if key in allowed:
                result[key] = value
            elif self.lax:
                warnings.warn(
                    f"Ignoring unknown key '{sub}'", UnknownKeyWarning
                )
                give(event="unknown_key", path=sub)
            else:
                raise self.error(f"Unknown key '{sub}'", sub)
        return result

    def number(self, value, path):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error(f"Expected a number at '{path}'", path)
        value = float(value)
        if not math.isfinite(value):
            raise self.error(f"Expected a finite number at '{path}'", path)
        return value

    def optional_number(self, value, path):
        """A number, or None when the document says false."""
        return None if value is False else self.number(value, path)

    def integer(self, value, path):
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.error(f"Expected an integer at '{path}'", path)
        return value

    def boolean(self, value, path):
        if not isinstance(value, bool):
            raise self.error(f"Expected true or false at '{path}'", path)
        return value

    def choice(self, value, path, options):
        if value not in options:
            raise self.error(
                f"Expected one of {', '.join(options)} at '{path}',"
                f" got {value!r}",
                path,
            )
        return value

    def choices(self, value, path, options):
        if not isinstance(value, list):
            raise self.error(f"Expected a list at '{path}'", path)
        return tuple(self.choice(v, path, options) for v in value)


def _build(reader, cls, data, path, converters):
    """Instantiate dataclass ``cls`` from table ``data`` with converters."""
    section = reader.section(data, path, set(converters))
    kwargs = {
        key: converters[key](value, f"{path}.{key}")
        for key, value in section.items()
    }
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise reader.error(str(exc), path) from exc


def _physical(reader, data, base):
    section = reader.section(data, "params", set(PARAM_KEYS))
    changes = {
        PARAM_KEYS[key]: reader.number(value, f"params.{key}")
        for key, value in section.items()
    }
    params = base.replace(**changes)
    failed = params.invalid_fields()
    if failed:
        raise ValidationError(failed)
    return params


def _pulses(reader, data):
    pulses = _default_pulses()
    section = reader.section(data, "pulses", {"probe", "signal"})
    for name, table in section.items():
        path = f"pulses.{name}"
        if not isinstance(table, dict):
            raise reader.error(f"Expected a table at '{path}'", path)
        num = reader.number
        pulses[name] = _build(
            reader,
            PulseSpec,
            {**_pulse_dict(pulses[name]), **table},
            path,
            {
                "shape": lambda v, p: reader.choice(v, p, tuple(SHAPES)),
                "center": num,
                "width": num,
                "normalize": reader.boolean,
                "amplitude": num,
                "edge": num,
            },
        )
    return pulses


def _pulse_dict(pulse):
    data = {
        "shape": pulse.shape,
        "center": pulse.center,
        "width": pulse.width,
        "normalize": pulse.normalize,
        "amplitude": pulse.amplitude,
    }
    if pulse.edge is not None:
        data["edge"] = pulse.edge
    return data


def scenario_from_dict(data, text="", preset=None, lax=False):
    """Resolve a parsed document into a :class:`Scenario`.

    Arguments:
        data: The parsed TOML tables.
        text: The source text, used to locate errors.
        preset: Preset name overriding the document's ``preset`` key.
        lax: Warn about unknown keys instead of failing.
    """
    reader = _Reader(text, lax)
    top = reader.section(
        data,
        "",
        {
            "preset",
            "mode",
            "seed",
            "params",
            "grid",
            "integrator",
            "pulses",
            "outputs",
            "desk",
            "constraints",
            "quantum",
            "rates",
        },
    )
    num = reader.number
    preset = preset or top.get("preset", DEFAULT_PRESET)
    if not isinstance(preset, str):
        raise reader.error("Expected a preset name", "preset")
    try:
        base = get_preset(preset)
    except ConfigError as exc:
        raise reader.error(str(exc), "preset") from exc

    integrator = reader.section(
        top.get("integrator", {}),
        "integrator",
        {"dt", "scheme", "drift_tolerance", "duration"},
    )
    duration = num(integrator.pop("duration", 1.6), "integrator.duration")
    if duration <= 0:
        raise reader.error(
            "The evolution duration must be positive", "integrator.duration"
        )
    integrator.setdefault("dt", Scenario.integrator.dt)

    rates = reader.section(top.get("rates", {}), "rates", set(RATE_KEYS))

    return Scenario(
        preset=preset,
        mode=reader.choice(top.get("mode", "design-only"), "mode", MODES),
        seed=reader.integer(top.get("seed", 0), "seed"),
        params=_physical(reader, top.get("params", {}), base),
        grid=_build(
            reader,
            GridSpec,
            top.get("grid", {}),
            "grid",
            {"n_cells": reader.integer, "length_factor": num},
        ),
        integrator=_build(
            reader,
            IntegratorSettings,
            integrator,
            "integrator",
            {
                "dt": num,
                "scheme": lambda v, p: reader.choice(v, p, ("strang", "lie")),
                "drift_tolerance": num,
            },
        ),
        duration=duration,
        pulses=_pulses(reader, top.get("pulses", {})),
        outputs=_build(
            reader,
            OutputSpec,
            top.get("outputs", {}),
            "outputs",
            {
                "observables": lambda v, p: reader.choices(
                    v, p, tuple(DEFAULT_OBSERVERS)
                ),
                "formats": lambda v, p: reader.choices(v, p, FORMATS),
            },
        ),
        desk=_build(
            reader,
            DeskSpec,
            top.get("desk", {}),
            "desk",
            {
                "max_signal_velocity": reader.optional_number,
                "max_bragg_rate": reader.optional_number,
            },
        ),
        constraints=_build(
            reader,
            ConstraintSpec,
            top.get("constraints", {}),
            "constraints",
            {"ratio_threshold": num, "bragg_tolerance": num},
        ),
        quantum=_build(
            reader,
            QuantumSpec,
            top.get("quantum", {}),
            "quantum",
            {
                "n_cells": reader.integer,
                "length_factor": num,
                "probe_center": num,
                "signal_center": num,
                "width": num,
                "dt": num,
                "duration": num,
                "oracle": reader.boolean,
            },
        ),
        rate_overrides={
            key: num(value, f"rates.{key}") for key, value in rates.items()
        },
    )


def parse_scenario(text, preset=None, lax=False):
    """Parse a TOML scenario document.

    Arguments:
        text: The document.
        preset: Preset name overriding the document's ``preset`` key.
        lax: Warn about unknown keys instead of failing.

    Raises:
        ScenarioError: On malformed TOML, unknown keys or wrong types.
        ValidationError: If physical inputs violate their invariants.
    """
    try:
        data = toml.loads(text)
    except toml.TomlDecodeError as exc:
        raise ScenarioError(exc.msg, line=exc.lineno) from exc
    return scenario_from_dict(data, text=text, preset=preset, lax=lax)


def load_scenario(path, preset=None, lax=False):
    with open(path, encoding="utf-8") as f:
        return parse_scenario(f.read(), preset=preset, lax=lax)


#################
# Serialization #
#################


def scenario_to_dict(scenario):
    """Fully resolved document for ``scenario``, ready for TOML."""
    s = scenario
    params = {
        key: getattr(s.params, name) for key, name in PARAM_KEYS.items()
    }
    desk = {
        key: False if value is None else value
        for key, value in (
            ("max_signal_velocity", s.desk.max_signal_velocity),
            ("max_bragg_rate", s.desk.max_bragg_rate),
        )
    }
    data = {
        "preset": s.preset,
        "mode": s.mode,
        "seed": s.seed,
        "params": params,
        "grid": {
            "n_cells": s.grid.n_cells,
            "length_factor": s.grid.length_factor,
        },
        "integrator": {
            "dt": s.integrator.dt,
            "scheme": s.integrator.scheme,
            "drift_tolerance": s.integrator.drift_tolerance,
            "duration": s.duration,
        },
        "pulses": {
            name: _pulse_dict(pulse) for name, pulse in s.pulses.items()
        },
        "outputs": {
            "observables": list(s.outputs.observables),
            "formats": list(s.outputs.formats),
        },
        "desk": desk,
        "constraints": {
            "ratio_threshold": s.constraints.ratio_threshold,
            "bragg_tolerance": s.constraints.bragg_tolerance,
        },
        "quantum": {
            f.name: getattr(s.quantum, f.name) for f in fields(QuantumSpec)
        },
    }
    if s.rate_overrides:
        data["rates"] = dict(s.rate_overrides)
    return data


def serialize_scenario(scenario):
    """TOML text that :func:`parse_scenario` reads back as ``scenario``."""
    return toml.dumps(scenario_to_dict(scenario))


##########
# Sweeps #
##########


@dataclass(frozen=True)
class SweepAxis:
    """Dotted scenario path and the values it takes."""

    path: str
    values: Tuple[float, ...]


@dataclass(frozen=True)
class SweepSpec:
    """Cartesian parameter sweep.

    Attributes:
        axes: At least one :class:`SweepAxis`.
        targets: :class:`~kerrtrap.params.DerivedRates` fields to tabulate.
        workers: Number of worker processes; 1 runs in-process.
        mode: Run mode of each cell.
    """

    axes: Tuple[SweepAxis, ...]
    targets: Tuple[str, ...] = ("phi", "F")
    workers: int = 1
    mode: str = "design-only"

    def cells(self):
        """Every combination of axis values, first axis slowest."""
        return list(itertools.product(*(axis.values for axis in self.axes)))


TARGETS = tuple(
    f.name
    for f in fields(DerivedRates)
    if f.name not in ("eta", "cross_absorption_significant")
)


def _axis_values(reader, data, path):
    section = reader.section(data, path, {"path", "values", "range"})
    if "path" not in section:
        raise reader.error(f"Axis {path} needs a path", path)
    if ("values" in section) == ("range" in section):
        raise reader.error(
            f"Axis {path} needs exactly one of 'values' and 'range'", path
        )
    if "values" in section:
        raw = section["values"]
        if not isinstance(raw, list) or not raw:
            raise reader.error(f"Expected a nonempty list at {path}", path)
        values = tuple(reader.number(v, f"{path}.values") for v in raw)
    else:
        rng = reader.section(
            section["range"], f"{path}.range", {"start", "stop", "num", "scale"}
        )
        missing = {"start", "stop", "num"} - set(rng)
        if missing:
            raise reader.error(
                f"Range at {path} lacks {', '.join(sorted(missing))}", path
            )
        start = reader.number(rng["start"], f"{path}.range.start")
        stop = reader.number(rng["stop"], f"{path}.range.stop")
        num = reader.integer(rng["num"], f"{path}.range.num")
        scale = reader.choice(
            rng.get("scale", "linear"), f"{path}.range.scale", ("linear", "log")
        )
        if num < 1:
            raise reader.error(f"Range at {path} needs num >= 1", path)
        if scale == "log":
            if start <= 0 or stop <= 0:
                raise reader.error(
                    f"A log range at {path} needs positive bounds", path
                )
            values = tuple(float(v) for v in np.geomspace(start, stop, num))
        else:
            values = tuple(float(v) for v in np.linspace(start, stop, num))
    return SweepAxis(path=section["path"], values=values)


def parse_sweep(text, lax=False):
    """Parse a TOML sweep document.

    ::

        targets = ["phi", "F"]
        workers = 4

        [[axes]]
        path = "params.Omega_dB_rad_per_s"
        range = {start = 1e7, stop = 1e8, num = 5, scale = "log"}

    Raises:
        ScenarioError: On a malformed document.
        PathError: If an axis or target names no scenario field.
    """
    try:
        data = toml.loads(text)
    except toml.TomlDecodeError as exc:
        raise ScenarioError(exc.msg, line=exc.lineno) from exc
    reader = _Reader(text, lax)
    top = reader.section(data, "", {"axes", "targets", "workers", "mode"})
    raw_axes = top.get("axes", [])
    if not isinstance(raw_axes, list) or not raw_axes:
        raise reader.error("A sweep needs at least one [[axes]] entry", "axes")
    axes = tuple(
        _axis_values(reader, axis, f"axes[{i}]")
        for i, axis in enumerate(raw_axes)
    )
    for axis in axes:
        check_path(axis.path)
    targets = tuple(top.get("targets", ("phi", "F")))
    for target in targets:
        if target not in TARGETS:
            raise reader.error(
                f"Unknown sweep target '{target}'", "targets", cls=PathError
            )
    workers = reader.integer(top.get("workers", 1), "workers")
    if workers < 1:
        raise reader.error("workers must be at least 1", "workers")
    return SweepSpec(
        axes=axes,
        targets=targets,
        workers=workers,
        mode=reader.choice(top.get("mode", "design-only"), "mode", MODES),
    )


def check_path(path):
    """Raise :class:`PathError` unless ``path`` names a numeric field."""
    node = scenario_to_dict(Scenario())
    node["rates"] = {key: 0.0 for key in RATE_KEYS}
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            raise PathError(f"No scenario field '{path}'", path=path)
        node = node[part]
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise PathError(f"Scenario field '{path}' is not numeric", path=path)


def apply_path(scenario, path, value):
    """Copy of ``scenario`` with the field at dotted ``path`` set to ``value``.

    The result goes through the same validation as a parsed document.
    """
    check_path(path)
    data = scenario_to_dict(scenario)
    *tables, key = path.split(".")
    node = data
    for part in tables:
        node = node.setdefault(part, {})
    if isinstance(node.get(key), int) and not isinstance(node.get(key), bool):
        value = int(round(value))
    node[key] = value
    return scenario_from_dict(data)
