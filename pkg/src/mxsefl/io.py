"""JSON file formats for instances, allocations and audit reports.

Rationals are written as bare integers when integral and as ``"p/q"`` strings
otherwise. Output key order is fixed so files can be compared byte for byte.

Instance file::

    {"version": 1, "n": 2, "m": 3,
     "valuations": [{"type": "additive", "values": [4, 3, 1]},
                    {"type": "budget-additive", "values": [1, "1/2", 5], "budget": 4}]}

``"table"`` valuations list ``2**m`` values indexed by bundle bitmask.

Allocation file::

    {"version": 1, "bundles": [[1, 2], [0]], "assoc": [0, 1]}
"""
from __future__ import annotations

import json
from fractions import Fraction
from typing import Any

from .core import Instance, Valuation, ValuationKind, bundle, goods_of, to_fraction
from .envygraph import check_assoc, check_partition
from .errors import MxsEflError
from .solver import Allocation

FORMAT_VERSION = 1


class FileFormatError(MxsEflError, ValueError):
    pass


def encode_rational(x: Fraction) -> int | str:
    return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _rational(x: Any) -> Fraction:
    if isinstance(x, float):
        raise FileFormatError(f"floating point value {x!r}; write rationals as \"p/q\"")
    try:
        return to_fraction(x)
    except MxsEflError as exc:
        raise FileFormatError(str(exc)) from exc


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2) + "\n"


def instance_to_json(inst: Instance) -> dict:
    vals = []
    for v in inst.valuations:
        if v.kind is ValuationKind.TABLE:
            if len(v.table) != 1 << v.m:
                raise FileFormatError("only complete tables can be written")
            entry = {"type": v.kind.value, "values": [encode_rational(t) for _, t in v.table]}
        else:
            entry = {"type": v.kind.value, "values": [encode_rational(t) for t in v.values]}
            if v.budget is not None:
                entry["budget"] = encode_rational(v.budget)
        vals.append(entry)
    return {"version": FORMAT_VERSION, "n": inst.n, "m": inst.m, "valuations": vals}


def instance_from_json(obj: Any) -> Instance:
    if not isinstance(obj, dict):
        raise FileFormatError("instance file must hold a JSON object")
    if obj.get("version") != FORMAT_VERSION:
        raise FileFormatError(f"unsupported instance version {obj.get('version')!r}")
    try:
        n, m, raw = int(obj["n"]), int(obj["m"]), obj["valuations"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"malformed instance header: {exc}") from exc
    if not isinstance(raw, list) or len(raw) != n:
        raise FileFormatError(f"expected {n} valuations")
    vals = []
    for pos, entry in enumerate(raw):
        try:
            kind = ValuationKind(entry["type"])
            values = [_rational(t) for t in entry["values"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise FileFormatError(f"valuation {pos}: {exc}") from exc
        try:
            if kind is ValuationKind.TABLE:
                if len(values) != 1 << m:
                    raise FileFormatError(f"valuation {pos}: table needs {1 << m} values")
                v = Valuation.from_table(m, dict(enumerate(values)))
            elif kind is ValuationKind.BUDGET_ADDITIVE:
                if "budget" not in entry:
                    raise FileFormatError(f"valuation {pos}: budget-additive needs a budget")
                v = Valuation.budget_additive(values, _rational(entry["budget"]))
            else:
                if "budget" in entry:
                    raise FileFormatError(f"valuation {pos}: {kind.value} takes no budget")
                v = Valuation(kind, len(values), tuple(values))
        except FileFormatError:
            raise
        except MxsEflError as exc:
            raise FileFormatError(f"valuation {pos}: {exc}") from exc
        if v.m != m:
            raise FileFormatError(f"valuation {pos} covers {v.m} goods, expected {m}")
        vals.append(v)
    return Instance(n, m, tuple(vals))


def allocation_to_json(alloc: Allocation) -> dict:
    return {
        "version": FORMAT_VERSION,
        "bundles": [goods_of(b) for b in alloc.partition],
        "assoc": list(alloc.assoc),
    }


def allocation_from_json(obj: Any, inst: Instance) -> Allocation:
    if not isinstance(obj, dict) or obj.get("version") != FORMAT_VERSION:
        raise FileFormatError("not a version-1 allocation object")
    try:
        bundles = obj["bundles"]
        assoc = obj["assoc"]
        x = []
        for b in bundles:
            if any(not isinstance(g, int) or isinstance(g, bool) for g in b):
                raise FileFormatError("good ids must be integers")
            if len(set(b)) != len(b):
                raise FileFormatError("duplicate good in a bundle")
            x.append(bundle(b))
        f = tuple(None if a is None else int(a) for a in assoc)
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"malformed allocation: {exc}") from exc
    try:
        check_partition(x, inst.m)
        check_assoc(f, len(x), inst.n)
    except MxsEflError as exc:
        raise FileFormatError(str(exc)) from exc
    return Allocation(tuple(x), f)


def read_instance(path: str) -> Instance:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: {exc}") from exc
    return instance_from_json(obj)


def read_allocation(path: str, inst: Instance) -> Allocation:
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: {exc}") from exc
    return allocation_from_json(obj, inst)


def write_text(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)
