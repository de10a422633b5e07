"""Experiment reports: named assertions with a status, measured values and
deterministic JSON output."""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__

STATUSES = ("PASS", "FAIL", "INCONCLUSIVE")
EXIT_CODES = {"PASS": 0, "FAIL": 1, "INCONCLUSIVE": 2}
USAGE_EXIT = 3


@dataclass
class Assertion:
    name: str
    anchor: str
    status: str
    measured: object = None
    expected: object = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    def line(self) -> str:
        exp = "" if self.expected is None else f" (expected {_short(self.expected)})"
        return f"{self.status:<12} {self.name}: {_short(self.measured)}{exp}"

    def to_dict(self) -> dict:
        return {"name": self.name, "anchor": self.anchor, "status": self.status, "measured": self.measured,
                "expected": self.expected, "details": self.details}


def check(name: str, anchor: str, ok: bool, measured=None, expected=None, **details) -> Assertion:
    return Assertion(name, anchor, "PASS" if ok else "FAIL", measured, expected, details)


def overall_status(assertions) -> str:
    st = {a.status for a in assertions}
    if "FAIL" in st:
        return "FAIL"
    if "INCONCLUSIVE" in st or not st:
        return "INCONCLUSIVE"
    return "PASS"


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)) and len(v) <= 8:
        return "[" + ", ".join(_short(x) for x in v) + "]"
    if isinstance(v, dict) and len(v) <= 4:
        return "{" + ", ".join(f"{k}: {_short(x)}" for k, x in v.items()) + "}"
    s = repr(v)
    return s if len(s) <= 80 else s[:77] + "..."


def jsonable(obj):
    """Plain JSON types; non-finite floats become the strings "inf", "-inf", "nan"."""
    if hasattr(obj, "to_dict") and not isinstance(obj, type):
        return jsonable(obj.to_dict())
    if hasattr(obj, "model_dump"):
        return jsonable(obj.model_dump())
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if obj is None or isinstance(obj, str):
        return obj
    return repr(obj)


@dataclass
class Report:
    experiment: str
    anchor: str
    config: dict
    assertions: list
    measured: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    fields: dict = field(default_factory=dict, repr=False)  # sampled fields for CSV export, not serialized

    @property
    def status(self) -> str:
        return overall_status(self.assertions)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    def to_dict(self, timestamp: str | None = None) -> dict:
        return {"experiment": self.experiment, "anchor": self.anchor, "tool_version": __version__,
                "config": self.config, "status": self.status, "assertions": self.assertions,
                "measured": self.measured, "details": self.details, "notes": self.notes,
                "timestamp": timestamp}

    def to_json(self, timestamp: str | None = None) -> str:
        """Sorted keys and fixed layout: equal inputs give equal bytes apart from ``timestamp``."""
        return json.dumps(jsonable(self.to_dict(timestamp)), sort_keys=True, indent=2, allow_nan=False) + "\n"

    def summary_lines(self) -> list:
        return [a.line() for a in self.assertions] + [f"{self.status:<12} {self.experiment} (overall)"]


def without_timestamp(text: str) -> dict:
    d = json.loads(text)
    d.pop("timestamp", None)
    return d
