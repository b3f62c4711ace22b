"""Shared output helpers: round-trip float formatting and deterministic JSON."""

from __future__ import annotations

import json
import math
from typing import Any


def fmt(x: float) -> str:
    """17 significant digits, so every float survives a text round trip."""
    x = float(x)
    if x == 0.0:
        # collapse -0.0 so identical runs never differ by a sign bit
        return "0"
    return format(x, ".17g")


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return _jsonable(obj.item())
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"
