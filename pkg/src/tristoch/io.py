"""JSON interchange for tensors, vectors, density matrices, channels and blocks.

Formats (floats are written with ``repr`` precision, so values round-trip exactly):

* tensor: ``{"order": m, "dim": N, "entries": nested lists}``
* vector: ``{"entries": [...]}``
* matrix / density: ``{"dim": d, "re": [[...]], "im": [[...]]}``
* dynamical matrix: matrix fields plus ``"n"`` and ``"parts"`` (= m)
* Kraus set: ``{"dim": N, "ops": [matrix, ...]}``
* blocks: ``{"dim": N, "scheme": str, "blocks": [matrix, ...]}``
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from tristoch.coherify import BlockBasisFamily
from tristoch.numkit import DimensionError
from tristoch.qchannel import DynamicalMatrix


class FormatError(ValueError):
    """Input that is not valid JSON or lacks the required fields."""


def _require(obj: Any, *keys: str) -> None:
    if not isinstance(obj, dict):
        raise FormatError("expected a JSON object")
    missing = [k for k in keys if k not in obj]
    if missing:
        raise FormatError(f"missing field(s): {', '.join(missing)}")


def _list_field(obj: dict, key: str) -> list:
    if not isinstance(obj[key], list):
        raise FormatError(f"field {key!r} must be a list")
    return obj[key]


def _real_array(data, what: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{what}: entries must be numbers in a rectangular array") from exc
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{what}: entries must be finite")
    return arr


def tensor_to_json(t: np.ndarray) -> dict:
    t = np.asarray(t, dtype=float)
    return {"order": t.ndim, "dim": t.shape[0], "entries": t.tolist()}


def tensor_from_json(obj: Any) -> np.ndarray:
    _require(obj, "entries")
    t = _real_array(obj["entries"], "tensor")
    if t.ndim < 2 or len(set(t.shape)) != 1:
        raise FormatError(f"tensor must be cubic of order >= 2, got shape {t.shape}")
    if "order" in obj and obj["order"] != t.ndim:
        raise FormatError(f"declared order {obj['order']} but entries have order {t.ndim}")
    if "dim" in obj and obj["dim"] != t.shape[0]:
        raise FormatError(f"declared dim {obj['dim']} but entries have dim {t.shape[0]}")
    return t


def vector_to_json(v: np.ndarray) -> dict:
    return {"entries": np.asarray(v, dtype=float).tolist()}


def vector_from_json(obj: Any) -> np.ndarray:
    if isinstance(obj, list):
        obj = {"entries": obj}
    _require(obj, "entries")
    v = _real_array(obj["entries"], "vector")
    if v.ndim != 1:
        raise FormatError("vector entries must be a flat list")
    return v


def matrix_to_json(m: np.ndarray) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"dim": m.shape[0], "re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(obj: Any) -> np.ndarray:
    _require(obj, "re")
    re = _real_array(obj["re"], "matrix re")
    im = _real_array(obj["im"], "matrix im") if "im" in obj else np.zeros_like(re)
    if re.shape != im.shape or re.ndim != 2:
        raise FormatError("matrix re/im must be equal-shaped 2-D arrays")
    return re + 1j * im


def dynamical_to_json(d: DynamicalMatrix) -> dict:
    out = matrix_to_json(d.matrix)
    out.update({"n": d.n, "parts": d.m})
    return out


def dynamical_from_json(obj: Any) -> DynamicalMatrix:
    mat = matrix_from_json(obj)
    n = obj.get("n")
    if n is None:
        parts = obj.get("parts", 3)
        if isinstance(parts, bool) or not isinstance(parts, int) or parts < 2:
            raise FormatError(f"field 'parts' must be an integer >= 2, got {parts!r}")
        n = int(round(mat.shape[0] ** (1.0 / parts)))
    if isinstance(n, bool) or not isinstance(n, int):
        raise FormatError(f"field 'n' must be an integer, got {n!r}")
    try:
        return DynamicalMatrix(mat, n)
    except DimensionError as exc:
        raise FormatError(str(exc)) from exc


def kraus_to_json(ops) -> dict:
    ops = [np.asarray(k) for k in ops]
    return {"dim": ops[0].shape[0], "ops": [matrix_to_json(k) for k in ops]}


def kraus_from_json(obj: Any) -> list[np.ndarray]:
    _require(obj, "ops")
    ops = [matrix_from_json(k) for k in _list_field(obj, "ops")]
    if not ops:
        raise FormatError("Kraus set is empty")
    return ops


def blocks_to_json(b: BlockBasisFamily) -> dict:
    return {"dim": b.dim, "scheme": b.scheme, "blocks": [matrix_to_json(x) for x in b.blocks]}


def blocks_from_json(obj: Any) -> BlockBasisFamily:
    _require(obj, "blocks")
    blocks = [matrix_from_json(x) for x in _list_field(obj, "blocks")]
    dim = int(obj.get("dim", blocks[0].shape[1] if blocks else 0))
    return BlockBasisFamily(dim, tuple(blocks), str(obj.get("scheme", "custom")))


def load_json(path: str | Path) -> Any:
    """Read JSON from a path (``-`` is not supported); wraps parse errors as FormatError."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def dumps(obj: Any) -> str:
    """Deterministic JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
