"""Sweep reports, verdicts and bit-stable CSV/JSON emission."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Verdict", "SweepReport", "emit", "format_real"]


def format_real(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    return v


@dataclass(frozen=True)
class Verdict:
    """A named check: ``value`` compared against ``tolerance``.

    Informational verdicts are reported but never change the exit status.
    """

    name: str
    passed: bool
    value: float
    tolerance: float
    note: str = ""
    informational: bool = False

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "value": self.value, "tolerance": self.tolerance,
                "note": self.note, "informational": self.informational}


@dataclass
class SweepReport:
    name: str
    columns: tuple
    rows: list
    verdicts: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    details: list = field(default_factory=list)

    def __post_init__(self):
        for r in self.rows:
            missing = set(self.columns) - set(r)
            if missing:
                raise ValueError(f"row lacks columns {sorted(missing)}")

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts if not v.informational)

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def column(self, name: str) -> list:
        return [r[name] for r in self.rows]

    def as_dict(self) -> dict:
        return _jsonable({
            "name": self.name,
            "columns": list(self.columns),
            "rows": [{c: r[c] for c in self.columns} for r in self.rows],
            "details": self.details,
            "summary": self.summary,
            "verdicts": [v.as_dict() for v in self.verdicts],
            "passed": self.passed,
        })

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([format_real(r[c]) for c in self.columns])
        return buf.getvalue()

    def verdicts_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ("name", "passed", "value", "tolerance", "informational", "note")
        w.writerow(cols)
        for v in self.verdicts:
            d = v.as_dict()
            w.writerow([format_real(d[c]) for c in cols])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def emit(report: SweepReport, fmt: str, path: str) -> list:
    """Write ``report`` to ``path``; CSV also writes ``<stem>_verdicts.csv``.

    Returns the list of written paths.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    outputs = []
    try:
        if fmt == "json":
            outputs.append((path, report.to_json()))
        else:
            stem, _ = os.path.splitext(path)
            outputs.append((path, report.rows_csv()))
            outputs.append((stem + "_verdicts.csv", report.verdicts_csv()))
        for p, text in outputs:
            d = os.path.dirname(p)
            if d:
                os.makedirs(d, exist_ok=True)
            with open(p, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return [p for p, _ in outputs]
