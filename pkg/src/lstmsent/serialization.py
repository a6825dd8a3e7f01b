"""Canonical JSON text for weight files.

Floats are written with 17 significant digits so a load/save cycle is exact
and byte-stable. Keys keep the order they are given in.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import ConfigError, MalformedWeightsError

FORMAT_VERSION = 1


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def array_to_json(a: np.ndarray) -> str:
    a = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ConfigError("refusing to serialise non-finite parameters")
    if a.ndim == 0:
        return _fmt(a)
    if a.ndim == 1:
        return "[" + ",".join(_fmt(x) for x in a) + "]"
    return "[" + ",".join(array_to_json(row) for row in a) + "]"


def object_to_json(fields: list[tuple[str, str]], indent: str = "") -> str:
    """Join pre-rendered ``(key, json_text)`` pairs into one object, one key per line."""
    inner = indent + "  "
    body = ",\n".join(f"{inner}{json.dumps(k)}: {v}" for k, v in fields)
    return "{\n" + body + "\n" + indent + "}"


def parse_document(text: str) -> dict:
    try:
        # parse_int=float keeps "-0" as -0.0 so the next save is byte-identical
        doc = json.loads(text, parse_int=float)
    except json.JSONDecodeError as exc:
        raise MalformedWeightsError(f"not a valid weights document: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedWeightsError("weights document must be a JSON object")
    return doc


def as_int(value, key: str) -> int:
    if not isinstance(value, float) or value != int(value):
        raise MalformedWeightsError(f"{key} must be an integer, got {value!r}")
    return int(value)
