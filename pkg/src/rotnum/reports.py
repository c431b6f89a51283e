"""Study configuration, result records and plot-ready output files.

Tables are written as CSV (or JSON) with a JSON sidecar holding provenance:
seed, package version, parameters and a timestamp. CSV bodies never contain
timestamps, so identical configurations give byte-identical tables.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from ._version import __version__


class ReportError(OSError):
    """Writing or reading a study file failed."""


def _plain(x):
    """Numpy scalars/arrays and tuples to plain YAML/JSON types."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    return x


@dataclass
class StudyConfig:
    """Parameters of one CLI run; ``params`` holds the command-specific values."""

    command: str
    seed: int = 0
    workers: int = 1
    out: str | None = None
    format: str = "csv"
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _plain(asdict(self))

    @classmethod
    def from_dict(cls, data: dict) -> "StudyConfig":
        data = dict(data or {})
        unknown = set(data) - {"command", "seed", "workers", "out", "format", "params"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "command" not in data:
            raise ValueError("config needs a 'command' entry")
        return cls(**{**data, "params": _plain(data.get("params") or {})})

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "StudyConfig":
        return cls.from_dict(yaml.safe_load(text))


def load_config(path) -> StudyConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ReportError(f"cannot read config {path}: {exc}") from exc
    return StudyConfig.loads(text)


def save_config(config: StudyConfig, path) -> None:
    try:
        Path(path).write_text(config.dumps())
    except OSError as exc:
        raise ReportError(f"cannot write config {path}: {exc}") from exc


@dataclass
class ResultRecord:
    """A table of results plus everything needed to reproduce it."""

    study: str
    columns: list
    rows: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    estimates: dict = field(default_factory=dict)
    seed: int = 0
    passed: bool | None = None
    checks: dict = field(default_factory=dict)
    version: str = __version__
    created: str = field(default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat())

    def provenance(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "rows"}
        out["n_rows"] = len(self.rows)
        return _plain(out)

    def failures(self) -> list[str]:
        return [name for name, c in self.checks.items() if not c.get("ok", True)]


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x)) if math.isfinite(x) else str(float(x))
    return str(_plain(x))


def table_csv(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc}") from exc


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def emit_table(record: ResultRecord, path, fmt: str = "csv") -> Path:
    """Write ``record`` to ``path`` (CSV with header, or JSON) and the provenance sidecar."""
    path = Path(path)
    if fmt == "csv":
        _write(path, table_csv(record.columns, record.rows))
    elif fmt == "json":
        body = {"columns": list(record.columns), "rows": _plain(record.rows)}
        _write(path, json.dumps(body, indent=1) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    _write(sidecar_path(path), json.dumps(record.provenance(), indent=1, sort_keys=True) + "\n")
    return path


HISTOGRAM_COLUMNS = ["bin_left", "bin_right", "mass"]


def histogram_rows(edges, mass) -> list:
    edges = np.asarray(edges, dtype=np.float64)
    mass = np.asarray(mass, dtype=np.float64)
    if len(edges) != len(mass) + 1:
        raise ValueError("need len(edges) == len(mass) + 1")
    return [(float(a), float(b), float(m)) for a, b, m in zip(edges[:-1], edges[1:], mass)]


def emit_histogram(edges, mass, path, record: ResultRecord | None = None) -> Path:
    """Histogram CSV with columns ``bin_left, bin_right, mass`` (plus sidecar)."""
    rec = record or ResultRecord("histogram", HISTOGRAM_COLUMNS)
    rec.columns = HISTOGRAM_COLUMNS
    rec.rows = histogram_rows(edges, mass)
    return emit_table(rec, path, "csv")


def read_table(path) -> tuple[list, list]:
    """Read back a CSV table: ``(columns, rows)`` with numeric cells as floats."""
    with open(path, newline="") as fh:
        r = list(csv.reader(fh))
    cols, body = r[0], r[1:]

    def num(s):
        try:
            return float(s)
        except ValueError:
            return s

    return cols, [[num(c) for c in row] for row in body]


def check(value: float, expected: float, tol: float, **extra) -> dict[str, Any]:
    """A pass/fail entry ``|value - expected| <= tol``."""
    diff = abs(float(value) - float(expected))
    return {"value": float(value), "expected": float(expected), "tol": float(tol),
            "diff": diff, "ok": bool(diff <= tol), **extra}


def below(value: float, limit: float) -> dict[str, Any]:
    """A pass/fail entry ``value < limit`` (strict)."""
    return {"value": float(value), "expected": float(limit), "tol": 0.0,
            "diff": float(limit) - float(value), "ok": bool(value < limit)}
