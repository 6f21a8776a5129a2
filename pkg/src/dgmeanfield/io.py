"""JSON model files.

Every file is one object with a ``kind`` field; indices are 0-based.

=================  ==========================================================
kind               fields
=================  ==========================================================
``flid``           ``n``, ``D``, ``W`` (n rows of D non-negative reals), ``u``
``cut``            ``n``, ``directed``, ``edges`` (``[src, dst, weight]``)
``gibbs``          ``n``, ``terms`` (``{"vars": [...], "theta": t}``),
                   optional ``validate`` (``sign``/``exhaustive``/``none``)
``setcover``       ``n``, ``concepts`` (``{"weight": m, "items": [...]}``)
``modular``        ``n``, ``weights``
``table``          ``n``, ``values`` (length ``2**n``, bit ``i`` = element ``i``)
``concave_modular``  ``n``, ``weights``, ``modular`` (rows), ``exponent``
=================  ==========================================================
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .set_functions import (
    ConcaveOverModular,
    CutGraph,
    FlidModel,
    GibbsPolynomial,
    ModelError,
    ModularFunction,
    SetCoverInstance,
    SetFunction,
    TableFunction,
)


class ModelFileError(ValueError):
    """A model file that cannot be parsed or violates its family's invariants."""


def _field(d: dict, name: str, kind: str):
    if name not in d:
        raise ModelFileError(f"{kind} model is missing field {name!r}")
    return d[name]


def _check_n(d: dict, kind: str, actual: int) -> None:
    n = _field(d, "n", kind)
    if not isinstance(n, int) or n != actual:
        raise ModelFileError(f"{kind} model: n={n!r} does not match data of size {actual}")


def _matrix(value, name: str, rows: int, cols: int) -> np.ndarray:
    if not isinstance(value, list) or len(value) != rows:
        raise ModelFileError(f"{name} must have {rows} rows")
    for r, row in enumerate(value):
        if not isinstance(row, list) or len(row) != cols:
            raise ModelFileError(f"{name}[{r}] must have {cols} entries")
    try:
        return np.array(value, dtype=float).reshape(rows, cols)
    except (TypeError, ValueError) as exc:
        raise ModelFileError(f"{name} has a non-numeric entry") from exc


def model_from_dict(d: dict[str, Any]) -> SetFunction:
    if not isinstance(d, dict):
        raise ModelFileError("model must be a JSON object")
    kind = d.get("kind")
    try:
        if kind == "flid":
            n, D = _field(d, "n", kind), _field(d, "D", kind)
            if not (isinstance(n, int) and isinstance(D, int) and n >= 1 and D >= 1):
                raise ModelFileError(f"flid model needs integer n, D >= 1, got n={n!r}, D={D!r}")
            W = _matrix(_field(d, "W", kind), "W", n, D)
            neg = np.argwhere(W < 0)
            if neg.size:
                i, j = neg[0]
                raise ModelFileError(f"W[{i}][{j}] = {W[i, j]} is negative")
            u = _matrix([_field(d, "u", kind)], "u", 1, n)[0]
            return FlidModel(W, u)
        if kind == "cut":
            return CutGraph(_field(d, "n", kind), _field(d, "edges", kind), bool(d.get("directed", True)))
        if kind == "gibbs":
            terms = [(t["vars"], t["theta"]) for t in _field(d, "terms", kind)]
            return GibbsPolynomial(_field(d, "n", kind), terms, d.get("validate", "sign"))
        if kind == "setcover":
            concepts = [(c["weight"], c["items"]) for c in _field(d, "concepts", kind)]
            return SetCoverInstance(_field(d, "n", kind), concepts)
        if kind == "modular":
            m = ModularFunction(_field(d, "weights", kind))
            _check_n(d, kind, m.n)
            return m
        if kind == "table":
            m = TableFunction(_field(d, "values", kind))
            _check_n(d, kind, m.n)
            return m
        if kind == "concave_modular":
            m = ConcaveOverModular(_field(d, "weights", kind), _field(d, "modular", kind), _field(d, "exponent", kind))
            _check_n(d, kind, m.n)
            return m
    except ModelError as exc:
        raise ModelFileError(f"{kind} model: {exc}") from exc
    except (KeyError, TypeError) as exc:
        raise ModelFileError(f"{kind} model is malformed: {exc!r}") from exc
    raise ModelFileError(f"unknown model kind {kind!r}")


def model_to_dict(F: SetFunction) -> dict[str, Any]:
    if isinstance(F, FlidModel):
        return {"kind": "flid", "n": F.n, "D": F.D, "W": F.W.tolist(), "u": F.u.tolist()}
    if isinstance(F, CutGraph):
        return {"kind": "cut", "n": F.n, "directed": F.directed, "edges": [list(e) for e in F.edges]}
    if isinstance(F, GibbsPolynomial):
        # stored terms already passed validation
        return {"kind": "gibbs", "n": F.n, "validate": "none",
                "terms": [{"vars": list(vs), "theta": t} for vs, t in F.terms]}
    if isinstance(F, SetCoverInstance):
        return {"kind": "setcover", "n": F.n,
                "concepts": [{"weight": w, "items": list(c)} for w, c in F.concepts]}
    if isinstance(F, ModularFunction):
        return {"kind": "modular", "n": F.n, "weights": F.weights.tolist()}
    if isinstance(F, TableFunction):
        return {"kind": "table", "n": F.n, "values": F.values.tolist()}
    if isinstance(F, ConcaveOverModular):
        return {"kind": "concave_modular", "n": F.n, "weights": F.weights.tolist(),
                "modular": F.modular.tolist(), "exponent": F.exponent}
    raise TypeError(f"cannot serialize {type(F).__name__}")


def load_model(path) -> SetFunction:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"{path}: invalid JSON ({exc})") from exc
    try:
        return model_from_dict(data)
    except ModelFileError as exc:
        raise ModelFileError(f"{path}: {exc}") from exc


def save_model(F: SetFunction, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(F), indent=1) + "\n")
