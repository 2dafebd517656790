"""Residual records, convergence-order fits, and deterministic output.

All serialization here is byte-reproducible: floats are written with
repr (shortest round-trip form), JSON keys are sorted, CSV uses '\\n'
line endings, '.' decimals, and a fixed column order.  Timestamps never
enter these artifacts; volatile run info belongs in a separate metadata
file that golden comparisons exclude.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

FLOOR = 1e-12  # below this, residuals count as roundoff


@dataclass
class ResidualReport:
    """One named residual measurement with its verdict."""

    name: str
    max_norm: float
    l2_norm: float
    h: float | None = None
    t: float | None = None
    tolerance: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.max_norm < 0 or self.l2_norm < 0:
            raise ValueError("residual norms must be nonnegative")

    @property
    def verdict(self) -> bool | None:
        if self.tolerance is None:
            return None
        return bool(self.max_norm <= self.tolerance)

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "max_norm": _num(self.max_norm),
            "l2_norm": _num(self.l2_norm),
            "h": _num(self.h),
            "t": _num(self.t),
            "tolerance": _num(self.tolerance),
            "verdict": self.verdict,
        }
        if self.extra:
            out["extra"] = _normalize(self.extra)
        return out


def fit_convergence_order(hs, residuals, floor: float = FLOOR) -> dict:
    """Least-squares slope of log(residual) against log(h).

    Residuals at or below `floor` mean the measurement sits in roundoff;
    the fit is then meaningless and the result is tagged floor=True with
    slope None (a passing outcome for order checks).
    """
    hs = np.asarray(hs, dtype=float)
    res = np.asarray(residuals, dtype=float)
    if hs.shape != res.shape or hs.size < 2:
        raise ValueError("need matching h/residual arrays with >= 2 entries")
    if np.any(res < 0):
        raise ValueError("residuals must be nonnegative")
    if np.all(res <= floor):
        return {
            "slope": None,
            "floor": True,
            "h": [float(v) for v in hs],
            "residuals": [float(v) for v in res],
        }
    safe = np.maximum(res, floor * 1e-3)
    slope, intercept = np.polyfit(np.log(hs), np.log(safe), 1)
    return {
        "slope": float(slope),
        "intercept": float(intercept),
        "floor": False,
        "h": [float(v) for v in hs],
        "residuals": [float(v) for v in res],
    }


# -- deterministic writers ----------------------------------------------------


def _num(value):
    """Normalize a numeric/None value for JSON (no numpy scalars, no NaN)."""
    if value is None:
        return None
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    value = float(value)
    if np.isnan(value):
        return None
    if np.isinf(value):
        return 1e308 if value > 0 else -1e308
    return value


def _normalize(obj):
    if isinstance(obj, dict):
        return {str(k): _normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_normalize(v) for v in obj.tolist()]
    if isinstance(obj, str) or obj is None:
        return obj
    return _num(obj)


def dumps_json(obj) -> str:
    return json.dumps(_normalize(obj), sort_keys=True, indent=1) + "\n"


def write_json(path, obj):
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_json(obj))


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows):
    """Fixed-order CSV with repr floats; bitwise stable across runs."""
    lines = [",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError("row length does not match header")
        lines.append(",".join(format_cell(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
