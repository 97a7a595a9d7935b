import json
import math
from dataclasses import replace

import jsonschema
import numpy as np
import pytest

from kerrtrap.emit import (
    DEFAULT_OUT_DIR,
    OUT_DIR_ENV,
    EmitError,
    emit,
    emit_sweep,
    jsonable,
    load_schema,
    out_dir_for,
    report_json,
    table_csv,
)
from kerrtrap.runner import run
from kerrtrap.scenario import GridSpec, Scenario
from kerrtrap.utils import ConfigError

from .common import events, one_test_per_assert

design = run(Scenario())


def test_emit_is_deterministic(tmp_path):
    (first,) = emit(design, out_dir=tmp_path / "a")
    (second,) = emit(design, out_dir=tmp_path / "b")
    assert first.name == "report.json"
    assert first.read_bytes() == second.read_bytes()


def test_report_json_parses():
    data = json.loads(report_json(design))
    assert data["mode"] == "design-only"
    assert data["observables"]["phi"] == design.observables["phi"]
    assert list(data) == sorted(data)


def test_design_report_schema():
    jsonschema.validate(json.loads(report_json(design)), load_schema())


def test_classical_report(tmp_path):
    report = run(Scenario(mode="classical", grid=GridSpec(256, 3.0)))
    jsonschema.validate(json.loads(report_json(report)), load_schema())
    with events("emit", "path") as written:
        paths = emit(report, ["json", "plot-data"], out_dir=tmp_path)
    assert [p.name for p in paths] == ["report.json", "report-plot.csv"]
    assert written == [str(p) for p in paths]
    lines = paths[1].read_text(encoding="utf-8").splitlines()
    assert lines[0] == "z,probe_intensity,probe_phase,signal_intensity"
    assert len(lines) == 1 + 256


def test_csv_format(tmp_path):
    paths = emit(design, ["csv"], out_dir=tmp_path, stem="design")
    assert [p.name for p in paths] == [
        "design-constraints.csv",
        "design-phase_profile.csv",
    ]


def test_out_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path / "env"))
    (path,) = emit(design)
    assert path == tmp_path / "env" / "report.json"
    assert path.exists()
    assert out_dir_for(tmp_path / "given") == tmp_path / "given"


def test_default_out_dir(monkeypatch):
    monkeypatch.delenv(OUT_DIR_ENV, raising=False)
    assert str(out_dir_for()) == DEFAULT_OUT_DIR


def test_out_dir_is_file(tmp_path):
    target = tmp_path / "taken"
    target.write_text("", encoding="utf-8")
    with pytest.raises(EmitError) as info:
        emit(design, out_dir=target)
    assert info.value.path == target / "report.json"


def test_no_plot_data(tmp_path):
    report = replace(design, plot_table=None)
    with pytest.raises(EmitError):
        emit(report, ["plot-data"], out_dir=tmp_path)


def test_unknown_format(tmp_path):
    with pytest.raises(ConfigError):
        emit(design, ["pdf"], out_dir=tmp_path)


def test_emit_sweep(tmp_path):
    table = {"columns": ["a", "error"], "rows": [[1.0, ""], [None, "boom"]]}
    path = emit_sweep(table, out_dir=tmp_path)
    assert path.name == "sweep.csv"
    assert path.read_text(encoding="utf-8") == "a,error\n1.0,\n,boom\n"


@one_test_per_assert
def test_jsonable():
    assert jsonable(np.float64(1.5)) == 1.5
    assert jsonable(np.int64(3)) == 3
    assert jsonable(np.bool_(True)) is True
    assert jsonable(1 + 2j) == [1.0, 2.0]
    assert jsonable(math.nan) is None
    assert jsonable(math.inf) is None
    assert jsonable((1, np.array([2.0, 3.0]))) == [1, [2.0, 3.0]]
    assert jsonable({1: np.complex128(1j)}) == {"1": [0.0, 1.0]}
    assert jsonable("text") == "text"


def test_table_csv_none():
    table = {"columns": ["x", "y"], "rows": [[1, None], [2.5, True]]}
    assert table_csv(table) == "x,y\n1,\n2.5,True\n"
