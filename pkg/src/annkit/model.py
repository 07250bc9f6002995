"""Concrete feed-forward networks, activation functions and exact evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, ShapeMismatch, ValidationError

NEG_INF = -math.inf


def as_matrix(m) -> np.ndarray:
    """Return a read-only float64 2-D copy of ``m``; rejects NaN/inf."""
    arr = np.array(m, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeMismatch(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("matrix entries must be finite")
    arr.setflags(write=False)
    return arr


def as_vector(v) -> np.ndarray:
    arr = np.array(v, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValidationError("vector entries must be finite")
    arr.setflags(write=False)
    return arr


def _merge_intervals(parts):
    parts = sorted(parts)
    out = []
    for lo, hi in parts:
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------


class Activation:
    """Componentwise scalar activation.

    Subclasses provide ``scalar`` (math-based, used by the root solvers),
    vectorised ``__call__``, the exact image of a closed interval and the
    metadata queried by the soundness preconditions.
    """

    kind = ""
    nonnegative = False
    continuous = True
    monotone = True

    @property
    def wivp(self) -> bool:
        # every kind implemented here satisfies the WIVP exactly when continuous
        return self.continuous

    def scalar(self, x: float) -> float:
        raise NotImplementedError

    def __call__(self, x):
        raise NotImplementedError

    def lower_bound(self) -> float:
        raise NotImplementedError

    def image(self, lo: float, hi: float) -> List[Tuple[float, float]]:
        """Exact image of ``[lo, hi]`` as a sorted list of disjoint closed intervals."""
        return [(self.scalar(lo), self.scalar(hi))]

    def image_hull(self, lo: float, hi: float) -> Tuple[float, float]:
        parts = self.image(lo, hi)
        return parts[0][0], parts[-1][1]


@dataclass(frozen=True)
class Identity(Activation):
    kind = "identity"

    def scalar(self, x):
        return float(x)

    def __call__(self, x):
        return np.asarray(x, dtype=np.float64).copy()

    def lower_bound(self):
        return NEG_INF


@dataclass(frozen=True)
class ReLU(Activation):
    kind = "relu"
    nonnegative = True

    def scalar(self, x):
        return x if x > 0.0 else 0.0

    def __call__(self, x):
        return np.maximum(np.asarray(x, dtype=np.float64), 0.0)

    def lower_bound(self):
        return 0.0


@dataclass(frozen=True)
class LReLU(Activation):
    c: float = 0.01
    kind = "lrelu"

    @property
    def nonnegative(self):
        return self.c <= 0.0

    @property
    def monotone(self):
        return self.c >= 0.0

    def scalar(self, x):
        if x >= 0.0:
            return float(x)
        return 0.0 if self.c == 0.0 else self.c * x

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.c == 0.0:
            return np.maximum(x, 0.0)
        return np.where(x >= 0.0, x, self.c * x)

    def lower_bound(self):
        return NEG_INF if self.c > 0.0 else 0.0

    def image(self, lo, hi):
        ends = [self.scalar(lo), self.scalar(hi)]
        if lo <= 0.0 <= hi:
            ends.append(0.0)
        return [(min(ends), max(ends))]


@dataclass(frozen=True)
class Tanh(Activation):
    kind = "tanh"

    def scalar(self, x):
        return math.tanh(x)

    def __call__(self, x):
        return np.tanh(np.asarray(x, dtype=np.float64))

    def lower_bound(self):
        return -1.0


@dataclass(frozen=True)
class Thresh(Activation):
    """``x`` when ``x >= t``, else the constant ``v``."""

    t: float = 0.0
    v: float = 0.0
    kind = "thresh"

    @property
    def nonnegative(self):
        return self.v >= 0.0 and self.t >= 0.0

    @property
    def continuous(self):
        return self.v == self.t

    @property
    def monotone(self):
        return self.v <= self.t

    def scalar(self, x):
        return float(x) if x >= self.t else float(self.v)

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.where(x >= self.t, x, self.v)

    def lower_bound(self):
        # range is {v} union [t, inf)
        return min(self.v, self.t)

    def image(self, lo, hi):
        parts = []
        if lo < self.t:
            parts.append((float(self.v), float(self.v)))
        if hi >= self.t:
            parts.append((max(lo, self.t), float(hi)))
        return _merge_intervals(parts)


@dataclass(frozen=True)
class Shifted(Activation):
    """``max(base(x) + s, 0)``; non-negative by construction."""

    base: Activation = field(default_factory=ReLU)
    s: float = 0.0
    kind = "shifted"
    nonnegative = True

    def __post_init__(self):
        if not self.s >= 0.0 or not math.isfinite(self.s):
            raise ValidationError(f"shift must be finite and >= 0, got {self.s!r}")

    @property
    def continuous(self):
        return self.base.continuous

    @property
    def monotone(self):
        return self.base.monotone

    def scalar(self, x):
        y = self.base.scalar(x) + self.s
        return y if y > 0.0 else 0.0

    def __call__(self, x):
        return np.maximum(self.base(x) + self.s, 0.0)

    def lower_bound(self):
        return max(self.base.lower_bound() + self.s, 0.0)

    def image(self, lo, hi):
        return _merge_intervals(
            (max(a + self.s, 0.0), max(b + self.s, 0.0)) for a, b in self.base.image(lo, hi)
        )


def eval_activation(a: Activation, x: float) -> float:
    return a.scalar(float(x))


def activation_lower_bound(a: Activation) -> float:
    """Constant ``C`` with ``a(x) >= C`` everywhere, or ``-inf`` if unbounded below."""
    return a.lower_bound()


# ---------------------------------------------------------------------------
# Boxes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box ``[lo_1, hi_1] x ... x [lo_k, hi_k]`` (bounds may be infinite)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.array(self.lo, dtype=np.float64).reshape(-1)
        hi = np.array(self.hi, dtype=np.float64).reshape(-1)
        if lo.shape != hi.shape:
            raise DimensionMismatch("box bounds have different lengths")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise ValidationError("box requires lo <= hi in every coordinate")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, v):
        v = np.asarray(v, dtype=np.float64).reshape(-1)
        return cls(v, v)

    @property
    def dim(self):
        return self.lo.shape[0]

    @property
    def bounded(self):
        return bool(np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi)))

    def contains(self, v, eps=0.0):
        v = np.asarray(v, dtype=np.float64).reshape(-1)
        if v.shape != self.lo.shape:
            raise DimensionMismatch(f"point of length {v.shape[0]} vs box of dim {self.dim}")
        return bool(np.all(v >= self.lo - eps) and np.all(v <= self.hi + eps))

    def __eq__(self, other):
        return (
            isinstance(other, Box)
            and np.array_equal(self.lo, other.lo)
            and np.array_equal(self.hi, other.hi)
        )

    def __repr__(self):
        return f"Box(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


# ---------------------------------------------------------------------------
# Networks
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DnnLayer:
    weights: np.ndarray
    activation: Activation

    def __post_init__(self):
        object.__setattr__(self, "weights", as_matrix(self.weights))
        if not isinstance(self.activation, Activation):
            raise ValidationError(f"not an activation: {self.activation!r}")

    @property
    def in_dim(self):
        return self.weights.shape[1]

    @property
    def out_dim(self):
        return self.weights.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, DnnLayer)
            and np.array_equal(self.weights, other.weights)
            and self.activation == other.activation
        )


@dataclass(frozen=True)
class Trace:
    """``pre[i]`` is ``W^(i+1) v^(i)``; ``post[i]`` is ``v^(i)`` (``post[0]`` the input)."""

    pre: Tuple[np.ndarray, ...]
    post: Tuple[np.ndarray, ...]

    @property
    def output(self):
        return self.post[-1]


@dataclass(frozen=True)
class Dnn:
    layers: Tuple[DnnLayer, ...]

    def __post_init__(self):
        layers = tuple(
            l if isinstance(l, DnnLayer) else DnnLayer(*l) for l in self.layers
        )
        if not layers:
            raise ValidationError("a network needs at least one layer")
        for i in range(1, len(layers)):
            if layers[i].in_dim != layers[i - 1].out_dim:
                raise DimensionMismatch(
                    f"layer {i + 1} expects {layers[i].in_dim} inputs but layer {i} "
                    f"produces {layers[i - 1].out_dim}"
                )
        object.__setattr__(self, "layers", layers)

    @classmethod
    def from_layers(cls, spec: Sequence[Tuple[object, Activation]]) -> "Dnn":
        return cls(tuple(DnnLayer(w, a) for w, a in spec))

    @property
    def sizes(self) -> List[int]:
        return [self.layers[0].in_dim] + [l.out_dim for l in self.layers]

    @property
    def in_dim(self):
        return self.layers[0].in_dim

    @property
    def out_dim(self):
        return self.layers[-1].out_dim

    def trace(self, v) -> Trace:
        v = np.asarray(v, dtype=np.float64).reshape(-1)
        if v.shape[0] != self.in_dim:
            raise DimensionMismatch(f"input has length {v.shape[0]}, network expects {self.in_dim}")
        pre, post = [], [v]
        for layer in self.layers:
            w = layer.weights @ post[-1]
            pre.append(w)
            post.append(layer.activation(w))
        return Trace(tuple(pre), tuple(post))

    def __call__(self, v):
        return self.trace(v).output


def eval_dnn(n: Dnn, v) -> np.ndarray:
    return n(v)


def dnn_trace(n: Dnn, v) -> Trace:
    return n.trace(v)
