"""Deterministic report output.

Keys are sorted and floats are written with their shortest round-trip
representation, so emitting the same report twice gives the same bytes.
"""

import csv
import io
import json
import math
import os
from pathlib import Path

import numpy as np
from giving import give

from .utils import ConfigError

OUT_DIR_ENV = "KERRTRAP_OUT_DIR"
DEFAULT_OUT_DIR = "kerrtrap-out"
SCHEMA_PATH = Path(__file__).with_name("report.schema.json")


class EmitError(ConfigError):
    """A report could not be written.

    Attributes:
        path: The target path.
    """

    def __init__(self, message, path):
        self.path = path
        super().__init__(f"{message}: {path}")


def jsonable(value):
    """Convert numpy values, complex numbers and tuples for JSON.

    Complex numbers become ``[re, im]`` and non-finite floats become None.
    """
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [jsonable(value.real), jsonable(value.imag)]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def report_json(report):
    """JSON text of a :class:`~kerrtrap.runner.RunReport`."""
    data = jsonable(report.to_dict())
    return json.dumps(data, sort_keys=True, indent=2, allow_nan=False) + "\n"


def table_csv(table):
    """CSV text of a ``{"columns", "rows"}`` table."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table["columns"])
    for row in table["rows"]:
        writer.writerow("" if cell is None else cell for cell in jsonable(row))
    return buffer.getvalue()


def load_schema():
    with open(SCHEMA_PATH, encoding="utf-8") as f:
        return json.load(f)


def out_dir_for(out_dir=None):
    """``out_dir``, else ``$KERRTRAP_OUT_DIR``, else :data:`DEFAULT_OUT_DIR`."""
    return Path(out_dir or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR)


def _write(path, text):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as exc:
        raise EmitError(f"Could not write ({exc.strerror})", path) from exc
    give(event="emit", path=str(path))
    return path


def emit(report, formats=("json",), out_dir=None, stem="report"):
    """Write ``report`` in each of ``formats``.

    * ``json``: the whole report, as ``<stem>.json``.
    * ``csv``: one ``<stem>-<table>.csv`` per table.
    * ``plot-data``: the report's plot table as ``<stem>-plot.csv``.

    Returns:
        The list of written paths.

    Raises:
        EmitError: If a file cannot be written, or plot data is requested
            from a report without a plot table.
    """
    directory = out_dir_for(out_dir)
    paths = []
    for fmt in formats:
        if fmt == "json":
            text = report_json(report)
            paths.append(_write(directory / f"{stem}.json", text))
        elif fmt == "csv":
            for name in sorted(report.tables):
                text = table_csv(report.tables[name])
                paths.append(_write(directory / f"{stem}-{name}.csv", text))
        elif fmt == "plot-data":
            path = directory / f"{stem}-plot.csv"
            if report.plot_table is None:
                raise EmitError("This report has no plot data", path)
            text = table_csv(report.tables[report.plot_table])
            paths.append(_write(path, text))
        else:
            raise ConfigError(f"Unknown output format '{fmt}'")
    return paths


def emit_sweep(table, out_dir=None, stem="sweep"):
    """Write a sweep table as ``<stem>.csv``."""
    return _write(out_dir_for(out_dir) / f"{stem}.csv", table_csv(table))
