"""JSON file format for polyhedral currents.

Schema::

    {
      "ambient_dim": n,
      "lattice_dim": m,
      "pieces": [
        {"start": [n floats], "end": [n floats], "theta": [m integers]},
        ...
      ]
    }

Coordinates are snapped to 1e-9 on load so that vertices meant to coincide
compare exactly equal; multiplicities must be exact integers.
"""

from __future__ import annotations

import json
from typing import Sequence

from .currents import LatticeVector, OrientedSegment, PolyhedralCurrent

__all__ = ["SchemaError", "load_current", "parse_current", "dump_current", "dump_loops"]

SNAP_DECIMALS = 9


class SchemaError(ValueError):
    """Schema violation with the offending field path, e.g. 'pieces[3].theta'."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _snap(x: float) -> float:
    return round(float(x), SNAP_DECIMALS)


def _require(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise SchemaError(path, message)


def _number_list(obj, path: str, length: int, integral: bool) -> list:
    _require(isinstance(obj, (list, tuple)), path, "expected a list")
    _require(len(obj) == length, path, f"expected {length} entries, got {len(obj)}")
    out = []
    for i, x in enumerate(obj):
        _require(
            isinstance(x, (int, float)) and not isinstance(x, bool),
            f"{path}[{i}]",
            "expected a number",
        )
        if integral:
            _require(float(x).is_integer(), f"{path}[{i}]", f"expected an integer, got {x}")
            out.append(int(x))
        else:
            out.append(_snap(x))
    return out


def parse_current(doc: dict) -> PolyhedralCurrent:
    """Validate a parsed JSON document and build the current."""
    _require(isinstance(doc, dict), "$", "expected a JSON object")
    for field in ("ambient_dim", "lattice_dim", "pieces"):
        _require(field in doc, "$", f"missing field '{field}'")
    n, m = doc["ambient_dim"], doc["lattice_dim"]
    _require(isinstance(n, int) and not isinstance(n, bool) and n >= 1, "ambient_dim", "expected a positive integer")
    _require(isinstance(m, int) and not isinstance(m, bool) and m >= 1, "lattice_dim", "expected a positive integer")
    _require(isinstance(doc["pieces"], list), "pieces", "expected a list")

    pieces = []
    for i, raw in enumerate(doc["pieces"]):
        path = f"pieces[{i}]"
        _require(isinstance(raw, dict), path, "expected an object")
        for field in ("start", "end", "theta"):
            _require(field in raw, path, f"missing field '{field}'")
        start = _number_list(raw["start"], f"{path}.start", n, integral=False)
        end = _number_list(raw["end"], f"{path}.end", n, integral=False)
        theta = _number_list(raw["theta"], f"{path}.theta", m, integral=True)
        _require(start != end, path, f"degenerate segment at {start}")
        pieces.append((OrientedSegment(start, end), LatticeVector(theta)))
    return PolyhedralCurrent.build(pieces, ambient_dim=n, lattice_dim=m)


def load_current(path) -> PolyhedralCurrent:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError("$", f"invalid JSON: {exc}") from exc
    return parse_current(doc)


def current_to_doc(P: PolyhedralCurrent) -> dict:
    return {
        "ambient_dim": P.ambient_dim,
        "lattice_dim": P.lattice_dim,
        "pieces": [
            {"start": list(seg.start), "end": list(seg.end), "theta": list(theta)}
            for seg, theta in P.pieces
        ],
    }


def dump_current(P: PolyhedralCurrent, path) -> None:
    with open(path, "w") as fh:
        json.dump(current_to_doc(P), fh, indent=2)
        fh.write("\n")


def dump_loops(loops: Sequence, path) -> None:
    doc = {
        "loops": [
            {"vertices": [list(v) for v in lp.vertices], "multiplicity": list(lp.multiplicity)}
            for lp in loops
        ]
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
