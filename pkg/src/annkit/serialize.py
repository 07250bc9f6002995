"""JSON file formats for networks, partitionings, abstract networks and witnesses.

Canonical text is ``json.dumps`` with sorted keys, two-space indentation and
Python's shortest round-trip float repr, so serialize -> parse -> serialize
is byte-identical.  NaN and infinities are rejected on input; octagon bounds
that are absent are written as ``null``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from .abstraction import Ann, AnnLayer, LayerwisePartitioning, Partitioning
from .domains import (
    INTERVAL,
    OCTAGON,
    PAIR_SIGNS,
    POWERSET,
    FiniteMatrixSet,
    IntervalMatrix,
    OctagonMatrix,
)
from .errors import ValidationError
from .model import Activation, Dnn, DnnLayer, Identity, LReLU, ReLU, Shifted, Tanh, Thresh
from .soundness import Witness

ACTIVATION_KINDS = ("identity", "relu", "lrelu", "tanh", "thresh", "shifted")


# ---------------------------------------------------------------------------
# Canonical text
# ---------------------------------------------------------------------------


def _reject_constant(name):
    raise ValidationError(f"non-finite number {name} is not allowed")


def loads(text: str) -> Any:
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}") from None


def dumps(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def read_json(path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None
    return loads(text)


def write_json(path, doc) -> None:
    Path(path).write_text(dumps(doc))


def _floats(a) -> Any:
    return np.asarray(a, dtype=np.float64).tolist()


def _nullable(a) -> Any:
    """Array to nested lists with ``+inf`` written as ``null``."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 0:
        return None if math.isinf(arr) else float(arr)
    return [_nullable(x) for x in arr]


def _from_nullable(a) -> np.ndarray:
    def conv(x):
        if isinstance(x, list):
            return [conv(y) for y in x]
        return math.inf if x is None else float(x)

    return np.array(conv(a), dtype=np.float64)


def _matrix(doc, what="weights") -> np.ndarray:
    if not isinstance(doc, list) or not doc or not all(isinstance(r, list) for r in doc):
        raise ValidationError(f"{what} must be a non-empty list of rows")
    if len({len(r) for r in doc}) != 1:
        raise ValidationError(f"{what} rows have different lengths")
    try:
        return np.array(doc, dtype=np.float64)
    except (TypeError, ValueError):
        raise ValidationError(f"{what} must contain numbers only") from None


def _field(doc: Dict, key: str, what: str):
    if not isinstance(doc, dict) or key not in doc:
        raise ValidationError(f"{what} is missing {key!r}")
    return doc[key]


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------


def activation_to_json(a: Activation) -> Dict:
    if isinstance(a, LReLU):
        params = {"c": float(a.c)}
    elif isinstance(a, Thresh):
        params = {"t": float(a.t), "v": float(a.v)}
    elif isinstance(a, Shifted):
        params = {"base": activation_to_json(a.base), "s": float(a.s)}
    elif isinstance(a, (Identity, ReLU, Tanh)):
        params = {}
    else:
        raise ValidationError(f"cannot serialize activation {a!r}")
    return {"kind": a.kind, "params": params}


def activation_from_json(doc) -> Activation:
    kind = _field(doc, "kind", "activation")
    params = doc.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ValidationError("activation params must be an object")

    def num(name, default=None):
        if name not in params:
            if default is None:
                raise ValidationError(f"activation {kind!r} needs parameter {name!r}")
            return default
        val = params[name]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ValidationError(f"parameter {name!r} must be a number")
        return float(val)

    if kind == "identity":
        return Identity()
    if kind == "relu":
        return ReLU()
    if kind == "tanh":
        return Tanh()
    if kind == "lrelu":
        return LReLU(num("c", 0.01))
    if kind == "thresh":
        return Thresh(num("t"), num("v"))
    if kind == "shifted":
        return Shifted(activation_from_json(_field(params, "base", "shifted activation")), num("s"))
    raise ValidationError(f"unknown activation kind {kind!r}; expected one of {ACTIVATION_KINDS}")


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelFile:
    """A network plus whether it expects a trailing constant-1 input."""

    dnn: Dnn
    carry_input: bool = False

    @property
    def user_in_dim(self) -> int:
        return self.dnn.in_dim - (1 if self.carry_input else 0)


def model_to_json(n: Dnn, carry_input: bool = False) -> Dict:
    doc = {
        "layers": [
            {"weights": _floats(l.weights), "activation": activation_to_json(l.activation)}
            for l in n.layers
        ]
    }
    if carry_input:
        doc["carry_input"] = True
    return doc


def model_from_json(doc) -> ModelFile:
    layers = _field(doc, "layers", "model")
    if not isinstance(layers, list) or not layers:
        raise ValidationError("model needs a non-empty list of layers")
    built = []
    for i, l in enumerate(layers, start=1):
        w = _matrix(_field(l, "weights", f"layer {i}"), f"layer {i} weights")
        act = activation_from_json(_field(l, "activation", f"layer {i}"))
        built.append(DnnLayer(w, act))
    carry = doc.get("carry_input", False)
    if not isinstance(carry, bool):
        raise ValidationError("carry_input must be true or false")
    return ModelFile(Dnn(tuple(built)), carry)


def load_model(path) -> ModelFile:
    return model_from_json(read_json(path))


# ---------------------------------------------------------------------------
# Partitionings
# ---------------------------------------------------------------------------


def partitioning_to_json(lp: LayerwisePartitioning) -> List:
    return [p.to_one_indexed() for p in lp.layers]


def partitioning_from_json(doc) -> LayerwisePartitioning:
    if not isinstance(doc, list):
        raise ValidationError("partition file must be a list of per-layer block lists")
    layers = []
    for i, blocks in enumerate(doc):
        if not isinstance(blocks, list) or not all(isinstance(b, list) for b in blocks):
            raise ValidationError(f"layer {i}: expected a list of index lists")
        for b in blocks:
            if not all(isinstance(x, int) and not isinstance(x, bool) for x in b):
                raise ValidationError(f"layer {i}: indices must be integers")
        layers.append(Partitioning.from_one_indexed(blocks))
    return LayerwisePartitioning(tuple(layers))


def load_partitioning(path) -> LayerwisePartitioning:
    return partitioning_from_json(read_json(path))


# ---------------------------------------------------------------------------
# Abstract networks
# ---------------------------------------------------------------------------

_SIGN_KEYS = {(1, 1): "++", (1, -1): "+-", (-1, 1): "-+", (-1, -1): "--"}
_KEY_SIGNS = {v: k for k, v in _SIGN_KEYS.items()}


def weight_to_json(e) -> Dict:
    if isinstance(e, IntervalMatrix):
        return {"lo": _floats(e.lo), "hi": _floats(e.hi)}
    if isinstance(e, OctagonMatrix):
        d = e.dim
        iu = np.triu_indices(d, k=1)
        pairs = {}
        for signs in PAIR_SIGNS:
            vals = e.pairs[signs][iu]
            keep = np.isfinite(vals)
            pairs[_SIGN_KEYS[signs]] = [
                [int(p), int(q), float(c)] for p, q, c in zip(iu[0][keep], iu[1][keep], vals[keep])
            ]
        return {
            "shape": list(e.shape),
            "upper": _nullable(e.upper),
            "neg_lower": _nullable(e.neg_lower),
            "pairs": pairs,
            "hull_lo": _floats(e.hull_lo),
            "hull_hi": _floats(e.hull_hi),
        }
    if isinstance(e, FiniteMatrixSet):
        return {"members": [_floats(m) for m in e.members]}
    raise ValidationError(f"cannot serialize weight element {e!r}")


def weight_from_json(domain: str, doc):
    if domain == INTERVAL:
        return IntervalMatrix(
            _matrix(_field(doc, "lo", "interval weight"), "lo"),
            _matrix(_field(doc, "hi", "interval weight"), "hi"),
        )
    if domain == POWERSET:
        members = _field(doc, "members", "powerset weight")
        if not isinstance(members, list) or not members:
            raise ValidationError("powerset weight needs a non-empty member list")
        return FiniteMatrixSet(tuple(_matrix(m, "member") for m in members))
    if domain == OCTAGON:
        shape = tuple(int(x) for x in _field(doc, "shape", "octagon weight"))
        if len(shape) != 2 or min(shape) < 1:
            raise ValidationError(f"bad octagon shape {shape}")
        d = shape[0] * shape[1]
        vecs = {}
        for key in ("upper", "neg_lower", "hull_lo", "hull_hi"):
            arr = _from_nullable(_field(doc, key, "octagon weight"))
            if arr.shape != (d,):
                raise ValidationError(f"octagon {key} must have {d} entries")
            vecs[key] = arr
        if not (np.all(np.isfinite(vecs["hull_lo"])) and np.all(np.isfinite(vecs["hull_hi"]))):
            raise ValidationError("octagon hull must be finite")
        raw = _field(doc, "pairs", "octagon weight")
        pairs = {}
        for signs in PAIR_SIGNS:
            bound = np.full((d, d), np.inf)
            for entry in raw.get(_SIGN_KEYS[signs], []):
                p, q, c = int(entry[0]), int(entry[1]), float(entry[2])
                if not 0 <= p < q < d:
                    raise ValidationError(f"octagon pair ({p}, {q}) out of range")
                bound[p, q] = c
            bound.setflags(write=False)
            pairs[signs] = bound
        for arr in vecs.values():
            arr.setflags(write=False)
        return OctagonMatrix(
            shape, vecs["upper"], vecs["neg_lower"], pairs, vecs["hull_lo"], vecs["hull_hi"]
        )
    raise ValidationError(f"unknown domain {domain!r}")


def ann_to_json(ann: Ann) -> Dict:
    return {
        "layers": [
            {
                "domain": l.domain,
                "weight": weight_to_json(l.weight),
                "activation": activation_to_json(l.activation),
            }
            for l in ann.layers
        ]
    }


def ann_from_json(doc) -> Ann:
    layers = _field(doc, "layers", "abstract network")
    if not isinstance(layers, list) or not layers:
        raise ValidationError("abstract network needs a non-empty list of layers")
    out = []
    for i, l in enumerate(layers, start=1):
        dom = _field(l, "domain", f"layer {i}")
        weight = weight_from_json(dom, _field(l, "weight", f"layer {i}"))
        out.append(AnnLayer(weight, activation_from_json(_field(l, "activation", f"layer {i}"))))
    return Ann(tuple(out))


def is_ann_doc(doc) -> bool:
    layers = doc.get("layers") if isinstance(doc, dict) else None
    return bool(layers) and isinstance(layers[0], dict) and "domain" in layers[0]


# ---------------------------------------------------------------------------
# Witnesses
# ---------------------------------------------------------------------------


def witness_to_json(w: Witness, verdict: Optional[bool] = None) -> Dict:
    doc = {
        "input": _floats(w.input),
        "matrices": [_floats(h) for h in w.matrices],
        "w_prime": [_floats(x) for x in w.w_prime],
        "mean_reps": [_floats(x) for x in w.mean_reps],
        "instantiated": [_floats(x) for x in w.instantiated],
        "expected": _floats(w.expected),
        "activations": [activation_to_json(a) for a in w.activations],
        "error": w.error,
    }
    if verdict is not None:
        doc["verdict"] = "PASS" if verdict else "FAIL"
    return doc


def witness_from_json(doc) -> Witness:
    vec = lambda x: np.array(x, dtype=np.float64)  # noqa: E731
    try:
        return Witness(
            vec(doc["input"]),
            tuple(_matrix(h, "witness matrix") for h in doc["matrices"]),
            tuple(vec(x) for x in doc["w_prime"]),
            tuple(vec(x) for x in doc["mean_reps"]),
            tuple(vec(x) for x in doc["instantiated"]),
            vec(doc["expected"]),
            tuple(activation_from_json(a) for a in doc.get("activations", [])),
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed witness: {exc}") from None
