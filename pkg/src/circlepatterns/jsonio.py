"""Deterministic JSON emission with fixed float formatting.

All numbers are written with 17 significant digits so that reports are
byte-identical across repeated runs and round-trip exactly.
"""

from __future__ import annotations

import json
import math

import numpy as np

FLOAT_FORMAT = "%.17g"


def _format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        raise ValueError(f"cannot serialize non-finite float {x}")
    return FLOAT_FORMAT % x


def dumps(obj, indent=0, _level=0) -> str:
    pad = " " * (indent * (_level + 1)) if indent else ""
    closing = " " * (indent * _level) if indent else ""
    nl = "\n" if indent else ""
    sep = "," + (nl if indent else " ")
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [dumps(v, indent, _level + 1) for v in obj]
        return "[" + nl + sep.join(pad + s for s in items) + nl + closing + "]" \
            if indent else "[" + ", ".join(items) + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{" + nl + sep.join(pad + s for s in items) + nl + closing + "}" \
            if indent else "{" + ", ".join(items) + "}"
    raise TypeError(f"cannot serialize {type(obj)!r}")
