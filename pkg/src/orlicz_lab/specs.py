"""Parsing of the small JSON / shorthand configuration fragments.

Every configurable object (Young function, growth function, simple function,
map, search spec) can be given either as a JSON object or, for the common
cases, as a shorthand string such as ``power:q=2`` or ``power:p=4,n=2``.
"""

from __future__ import annotations

import json
import math
from typing import Any

from .errors import UsageError


def _parse_scalar(text: str) -> Any:
    text = text.strip()
    low = text.lower()
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    if low in ("-inf", "-infinity"):
        return -math.inf
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_shorthand(text: str) -> dict:
    """``kind:key=val,key=val`` -> ``{"kind": kind, key: val, ...}``."""
    kind, _, rest = text.partition(":")
    out: dict[str, Any] = {"kind": kind.strip()}
    if rest.strip():
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq:
                raise UsageError(f"malformed shorthand item {item!r} in {text!r}")
            out[key.strip()] = _parse_scalar(val)
    return out


def load_spec(obj: Any) -> Any:
    """Accept a dict/list, a JSON string, a shorthand string, or ``@path``."""
    if isinstance(obj, (dict, list)):
        return obj
    if not isinstance(obj, str):
        raise UsageError(f"cannot interpret {obj!r} as a configuration fragment")
    text = obj.strip()
    if text.startswith("@"):
        with open(text[1:], encoding="utf-8") as fh:
            return json.load(fh, parse_constant=_json_constant)
    if text[:1] in "{[":
        try:
            return json.loads(text, parse_constant=_json_constant)
        except json.JSONDecodeError as exc:
            raise UsageError(f"invalid JSON: {exc}") from None
    return parse_shorthand(text)


def _json_constant(name: str) -> float:
    return {"Infinity": math.inf, "-Infinity": -math.inf, "NaN": math.nan}[name]


def as_extended(x: Any) -> float:
    """Read a number that may be written as the strings "inf" / "-inf"."""
    if isinstance(x, str):
        val = _parse_scalar(x)
        if isinstance(val, str):
            raise UsageError(f"expected a number, got {x!r}")
        return float(val)
    return float(x)


def jsonable(x: Any) -> Any:
    """Convert infinities to the "inf" sentinels used in the JSON formats."""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(x, dict):
        return {k: jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if hasattr(x, "item") and callable(x.item):
        return jsonable(x.item())
    return x
