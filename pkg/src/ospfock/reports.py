"""Report records shared by the verification suites and the CLI."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class IdentityReport:
    name: str
    residual: float
    tolerance: float
    safe_degree: int | None = None
    fitted_scalar: complex | None = None
    off_scalar: float | None = None
    note: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)

    def to_record(self) -> dict:
        rec = {
            "check": self.name,
            "passed": self.passed,
            "residual": _num(self.residual),
            "tolerance": _num(self.tolerance),
        }
        if self.safe_degree is not None:
            rec["safe_degree"] = self.safe_degree
        if self.fitted_scalar is not None:
            rec["fitted_scalar"] = [_num(self.fitted_scalar.real), _num(self.fitted_scalar.imag)]
        if self.off_scalar is not None:
            rec["off_scalar"] = _num(self.off_scalar)
        if self.note:
            rec["note"] = self.note
        for k in sorted(self.extra):
            rec[k] = _jsonable(self.extra[k])
        return rec


def _num(x: float):
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return repr(x)
    return x


def _jsonable(v):
    if isinstance(v, complex):
        return [_num(v.real), _num(v.imag)]
    if isinstance(v, float):
        return _num(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in sorted(v.items())}
    if hasattr(v, "item"):  # numpy scalar
        return _jsonable(v.item())
    return v


def dumps_record(rec: dict) -> str:
    # json emits repr-precision floats, so records round-trip exactly
    return json.dumps(rec, sort_keys=True, separators=(",", ":"))


def jsonl(records) -> str:
    return "".join(dumps_record(r) + "\n" for r in records)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])
    return buf.getvalue()
