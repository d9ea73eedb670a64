"""Structured measurement results and their CSV / JSON emission."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any


@dataclass
class SumReport:
    """Outcome of one sum or bound measurement.

    ``passed`` is None for pure measurements that carry no threshold.
    """

    name: str
    value: Any
    bound: float | None = None
    ratio: float | None = None
    passed: bool | None = None
    params: dict[str, Any] = field(default_factory=dict)
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return jsonable(asdict(self))

    @property
    def status(self) -> str:
        if self.passed is None:
            return "INFO"
        return "PASS" if self.passed else "FAIL"


def jsonable(obj: Any) -> Any:
    """Recursively convert numpy scalars, complex numbers and fractions to JSON types."""
    from fractions import Fraction

    import numpy as np

    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _finite(obj.real), "im": _finite(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        return _finite(float(obj))
    return obj


def _finite(x: float):
    if math.isfinite(x):
        return x
    return str(x)


def flatten(row: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    out: dict[str, Any] = {}
    for k, v in row.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict) and set(v) != {"re", "im"}:
            out.update(flatten(v, key + "."))
        elif isinstance(v, dict):
            out[key + ".re"] = v["re"]
            out[key + ".im"] = v["im"]
        elif isinstance(v, list):
            out[key] = json.dumps(v)
        else:
            out[key] = v
    return out


def rows_to_csv(rows: list[dict[str, Any]]) -> str:
    flat = [flatten(jsonable(r)) for r in rows]
    columns: list[str] = []
    for r in flat:
        for k in r:
            if k not in columns:
                columns.append(k)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for r in flat:
        writer.writerow(r)
    return buf.getvalue()
