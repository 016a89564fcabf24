"""JSON system format and report serialization."""
from __future__ import annotations

import dataclasses
import json
import math
from fractions import Fraction
from typing import Any

import numpy as np

from .core import SkewSystem, validate_system


def _num(v):
    # rationals travel as strings so they re-parse exactly
    if isinstance(v, Fraction):
        return str(v)
    return float(v)


def system_to_dict(system: SkewSystem) -> dict:
    branches = []
    for cell, (b, g) in zip(system.cells, system.branches):
        branches.append(
            {
                "cell": [[_num(lo), _num(hi)] for lo, hi in cell.bounds],
                "base": {
                    "ratio": _num(b.ratio),
                    "orth": [[_num(v) for v in row] for row in b.orth],
                    "shift": [_num(v) for v in b.shift],
                },
                "fiber": {
                    "ratio": _num(g.ratio),
                    "orth": [[_num(v) for v in row] for row in g.orth],
                    "coupling": [[_num(v) for v in row] for row in g.coupling],
                    "shift": [_num(v) for v in g.shift],
                },
            }
        )
    out = {"d": system.d, "k": system.k, "branches": branches}
    if system.meta:
        out["meta"] = to_jsonable(dict(system.meta), digits=None)
    return out


def dumps_system(system: SkewSystem) -> str:
    return json.dumps(system_to_dict(system), indent=2, sort_keys=False)


def loads_system(text: str) -> SkewSystem:
    from .errors import MalformedSystem

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedSystem(f"invalid JSON: {exc}") from None
    return validate_system(raw)


def round_sig(x: float, digits: int = 10) -> float:
    if not math.isfinite(x) or x == 0:
        return x
    return float(f"{x:.{digits}g}")


def to_jsonable(obj: Any, digits: int | None = 10):
    """Convert reports to plain JSON values; floats rounded to ``digits`` significant digits."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        if hasattr(obj, "to_dict"):
            return to_jsonable(obj.to_dict(), digits)
        return {f.name: to_jsonable(getattr(obj, f.name), digits) for f in dataclasses.fields(obj)}
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return x if digits is None else round_sig(x, digits)
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist(), digits)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v, digits) for v in obj]
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps_report(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2)
