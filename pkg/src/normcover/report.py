"""Report and instance serialization.

Reports are rendered by a small deterministic JSON writer: keys keep
insertion order and every float is written with 17 significant digits, so a
replayed run reproduces its report byte for byte.  Instance files are JSON
lines: a header object on the first line, then one covering constraint per
line, which keeps true online arrival representable through a pipe.
"""

from __future__ import annotations

import json
import math

from .errors import InvalidInstanceError
from .model import CoveringConstraint, InstanceHeader, NormTerm


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj, indent: int = 0) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    pad = " " * indent
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, (int,)):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(
            f"{pad}  {json.dumps(str(k))}: {dumps(v, indent + 2)}" for k, v in obj.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        flat = all(not isinstance(v, (dict, list, tuple)) for v in obj)
        if flat:
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        inner = ",\n".join(f"{pad}  {dumps(v, indent + 2)}" for v in obj)
        return "[\n" + inner + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def header_to_dict(header: InstanceHeader) -> dict:
    return {
        "n": header.n,
        "d": header.d,
        "a_min": header.a_min,
        "a_max": header.a_max,
        "disjoint": header.disjoint,
        "terms": [
            {"set": list(t.indices), "c": t.weight, "q": t.exponent}
            for t in header.norm_terms
        ],
    }


def header_from_dict(doc: dict) -> InstanceHeader:
    try:
        terms = tuple(
            NormTerm(indices=tuple(t["set"]), weight=t["c"], exponent=t["q"])
            for t in doc["terms"]
        )
        return InstanceHeader(
            n=doc["n"],
            norm_terms=terms,
            d=doc["d"],
            a_min=doc["a_min"],
            a_max=doc["a_max"],
            disjoint=bool(doc.get("disjoint", False)),
        )
    except (KeyError, TypeError) as exc:
        raise InvalidInstanceError(f"malformed instance header: {exc}") from exc


def constraint_to_dict(con: CoveringConstraint) -> dict:
    return {"entries": [[i, a] for i, a in con.entries]}


def constraint_from_dict(doc: dict) -> CoveringConstraint:
    try:
        return CoveringConstraint(tuple((int(i), float(a)) for i, a in doc["entries"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInstanceError(f"malformed constraint: {exc}") from exc


def write_instance(header: InstanceHeader, constraints) -> str:
    lines = [json.dumps(header_to_dict(header))]
    lines.extend(json.dumps(constraint_to_dict(c)) for c in constraints)
    return "\n".join(lines) + "\n"


def parse_instance_lines(lines):
    """Yield the header, then constraints, from an iterable of JSON lines.

    Errors carry the 1-based line number of the offending line.
    """
    it = iter(lines)
    lineno = 0
    header = None
    for raw in it:
        lineno += 1
        raw = raw.strip()
        if not raw:
            continue
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise InvalidInstanceError(f"line {lineno}: invalid JSON: {exc}") from exc
        if header is None:
            header = header_from_dict(doc)
            yield header
        else:
            try:
                yield constraint_from_dict(doc)
            except InvalidInstanceError as exc:
                raise InvalidInstanceError(f"line {lineno}: {exc}") from exc
    if header is None:
        raise InvalidInstanceError("instance stream is empty (missing header line)")


def read_instance(text: str):
    gen = parse_instance_lines(text.splitlines())
    header = next(gen)
    return header, list(gen)
