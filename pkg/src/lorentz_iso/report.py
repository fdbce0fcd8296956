"""Pass/fail records shared by every check."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

CSV_HEADER = ("name", "lhs", "rhs", "slack", "stderr", "pass")


def _num(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else ("-inf" if x < 0 else "nan")
    return x


@dataclass
class VerificationReport:
    """One inequality check: ``pass`` holds exactly when ``slack >= -tolerance``."""

    name: str
    lhs: float
    rhs: float
    slack: float
    tolerance: float
    stderr: float = 0.0
    metadata: dict = field(default_factory=dict)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.lhs = float(self.lhs)
        self.rhs = float(self.rhs)
        self.slack = float(self.slack)
        self.tolerance = float(self.tolerance)
        self.stderr = float(self.stderr)
        if self.stderr < 0 or math.isnan(self.stderr):
            raise ValueError("stderr must be a non-negative number")
        self.passed = bool(self.slack >= -self.tolerance)

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": _num(self.lhs), "rhs": _num(self.rhs),
                "slack": _num(self.slack), "tolerance": _num(self.tolerance),
                "stderr": _num(self.stderr), "pass": self.passed,
                "metadata": _clean(self.metadata)}

    @classmethod
    def from_dict(cls, d) -> "VerificationReport":
        rep = cls(d["name"], float(d["lhs"]), float(d["rhs"]), float(d["slack"]),
                  float(d["tolerance"]), float(d["stderr"]), dict(d.get("metadata", {})))
        return rep


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _clean(obj.tolist())
    if isinstance(obj, float):
        return _num(obj)
    return obj


def reports_to_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2, sort_keys=True) + "\n"


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in reports:
        w.writerow([r.name, repr(r.lhs), repr(r.rhs), repr(r.slack), repr(r.stderr),
                    "true" if r.passed else "false"])
    return buf.getvalue()
