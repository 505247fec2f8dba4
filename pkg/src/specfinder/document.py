"""JSON Hamiltonian documents.

Sparse form::

    {"n": 3,
     "r": [{"j": 0, "axis": "z", "value": 1.0}],
     "J": [{"j": 0, "k": 1, "alpha": "x", "beta": "x", "value": 0.5}],
     "metadata": {...}}
"""
from __future__ import annotations

import hashlib
import json
from itertools import combinations, product

from .hamiltonian import PairHamiltonian

AXES = ("x", "y", "z")


class DocumentError(ValueError):
    """The document does not describe a valid pair Hamiltonian."""


def _axis(value, where: str) -> str:
    if not isinstance(value, str) or value.lower() not in AXES:
        raise DocumentError(f"{where}: axis must be one of x, y, z, got {value!r}")
    return value.lower()


def _int(entry: dict, key: str, where: str) -> int:
    value = entry.get(key)
    if isinstance(value, bool) or not isinstance(value, int):
        raise DocumentError(f"{where}: '{key}' must be an integer")
    return value


def _value(entry: dict, where: str) -> float:
    value = entry.get("value")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DocumentError(f"{where}: 'value' must be a number")
    return float(value)


def parse_document(text: str) -> tuple[PairHamiltonian, dict]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    unknown = set(doc) - {"n", "r", "J", "metadata"}
    if unknown:
        raise DocumentError(f"unknown keys {sorted(unknown)}")
    n = doc.get("n")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise DocumentError("'n' must be a positive integer")

    fields, seen_r = [], set()
    for i, entry in enumerate(doc.get("r", [])):
        where = f"r[{i}]"
        if not isinstance(entry, dict):
            raise DocumentError(f"{where}: expected an object")
        j = _int(entry, "j", where)
        axis = _axis(entry.get("axis"), where)
        if not 0 <= j < n:
            raise DocumentError(f"{where}: qubit {j} out of range")
        if (j, axis) in seen_r:
            raise DocumentError(f"{where}: duplicate field ({j}, {axis})")
        seen_r.add((j, axis))
        fields.append((j, axis, _value(entry, where)))

    couplings, seen_J = [], set()
    for i, entry in enumerate(doc.get("J", [])):
        where = f"J[{i}]"
        if not isinstance(entry, dict):
            raise DocumentError(f"{where}: expected an object")
        j, k = _int(entry, "j", where), _int(entry, "k", where)
        a, b = _axis(entry.get("alpha"), where), _axis(entry.get("beta"), where)
        if not 0 <= j < k < n:
            raise DocumentError(f"{where}: need 0 <= j < k < n, got j={j}, k={k}")
        if (j, k, a, b) in seen_J:
            raise DocumentError(f"{where}: duplicate coupling ({j}, {k}, {a}, {b})")
        seen_J.add((j, k, a, b))
        couplings.append((j, k, a, b, _value(entry, where)))

    metadata = doc.get("metadata", {})
    if not isinstance(metadata, dict):
        raise DocumentError("'metadata' must be an object")
    try:
        H = PairHamiltonian.from_terms(n, fields, couplings)
    except ValueError as exc:
        raise DocumentError(str(exc)) from None
    return H, metadata


def dump_document(H: PairHamiltonian, metadata: dict | None = None) -> str:
    """Canonical text: nonzero entries in index order, sorted keys."""
    r = [
        {"j": j, "axis": AXES[a], "value": float(H.r[j, a])}
        for j, a in product(range(H.n), range(3))
        if H.r[j, a] != 0.0
    ]
    J = [
        {"j": j, "k": k, "alpha": AXES[a], "beta": AXES[b], "value": float(H.J[j, k, a, b])}
        for (j, k) in combinations(range(H.n), 2)
        for a, b in product(range(3), range(3))
        if H.J[j, k, a, b] != 0.0
    ]
    doc = {"n": H.n, "r": r, "J": J}
    if metadata:
        doc["metadata"] = metadata
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
