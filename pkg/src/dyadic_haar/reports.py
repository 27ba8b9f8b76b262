"""Run configuration and JSON reports.

A report lists checks.  ``hard`` checks are inequalities with explicit
constants; any failure makes the run exit nonzero.  ``measured`` checks
only record data.  Timing sits in its own top-level field so the rest of
the report is a pure function of the configuration and inputs.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .io import atomic_write

SEED_ENV = "DYADIC_SEED"
STATUSES = ("pass", "fail", "measured")


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


@dataclass
class RunConfig:
    seed: int = 0
    delta: float = 0.5
    strict_mode: bool = False
    T: int = 3
    T1: int = 1
    T2: int = 1
    tolerance: float = 1e-10
    omega_family: str = "default"
    paths: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return plain(asdict(self))

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)


def plain(obj):
    """JSON-safe copy: numpy scalars and arrays become Python values and
    non-finite floats become the strings "inf", "-inf" and "nan"."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
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
    return str(obj)


def check(name: str, ref: str, status, hard: bool = True, constants=None, witnesses=None) -> dict:
    """One report entry; a boolean ``status`` maps to pass/fail."""
    if isinstance(status, (bool, np.bool_)):
        status = "pass" if status else "fail"
    if status not in STATUSES:
        raise ValueError(f"bad status {status!r}")
    if status == "measured":
        hard = False
    return {"name": name, "ref": ref, "status": status, "hard": bool(hard),
            "constants": plain(constants or {}), "witnesses": plain(witnesses if witnesses is not None else [])}


class Report:
    def __init__(self, command: str, config: RunConfig):
        self.command = command
        self.config = config
        self.checks: list = []
        self.data: dict = {}
        self.wall_time: float | None = None

    def add(self, *args, **kw) -> dict:
        entry = check(*args, **kw)
        self.checks.append(entry)
        return entry

    @property
    def ok(self) -> bool:
        return all(c["status"] != "fail" for c in self.checks if c["hard"])

    def to_dict(self, timing: bool = True) -> dict:
        out = {"command": self.command, "config": self.config.to_dict(),
               "checks": self.checks, "data": plain(self.data), "pass": self.ok}
        if timing:
            out["timing"] = {"wall_time_s": self.wall_time}
        return out

    def text(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True, indent=1, allow_nan=False) + "\n"

    def write(self, path, timing: bool = True) -> None:
        atomic_write(path, self.text(timing))


def strip_timing(text: str) -> str:
    """Canonical report text without the timing field."""
    data = json.loads(text)
    data.pop("timing", None)
    return json.dumps(data, sort_keys=True, indent=1) + "\n"


REPORT_SCHEMA = {
    "type": "object",
    "required": ["command", "config", "checks", "data", "pass"],
    "properties": {
        "command": {"type": "string"},
        "config": {"type": "object", "required": ["seed", "delta", "tolerance"]},
        "pass": {"type": "boolean"},
        "data": {"type": "object"},
        "timing": {"type": "object", "properties": {"wall_time_s": {"type": ["number", "null"]}}},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "ref", "status", "hard", "constants", "witnesses"],
                "properties": {
                    "name": {"type": "string"},
                    "ref": {"type": "string", "minLength": 1},
                    "status": {"enum": list(STATUSES)},
                    "hard": {"type": "boolean"},
                    "constants": {"type": "object"},
                },
            },
        },
    },
}
