"""Deterministic JSON rendering of report objects.

Word tuples become comma-joined strings when used as keys and int lists
otherwise; non-finite floats become the strings "inf" / "-inf" / "nan" so the
output is strict JSON.  Dumping is always sorted and newline-terminated, so
identical inputs give byte-identical files.
"""

from __future__ import annotations

import dataclasses
import json
import math


def _key(k) -> str:
    if isinstance(k, tuple):
        return ",".join(str(s) for s in k)
    return str(k)


def jsonable(obj):
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
        return obj
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: jsonable(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {_key(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, frozenset):
        return [jsonable(x) for x in sorted(obj, key=lambda w: (len(w), w))]
    if isinstance(obj, (list, tuple)):
        return [jsonable(x) for x in obj]
    if hasattr(obj, "__dict__"):
        return {k: jsonable(v) for k, v in vars(obj).items()
                if not k.startswith("_")}
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2,
                      allow_nan=False) + "\n"
