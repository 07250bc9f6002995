"""Shift construction: an equivalent network (on a bounded region) whose hidden
activations are all non-negative, via ``max(sigma(x) + |C|, 0)`` and one
constant-carrying dimension per layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ._numeric import bisect_level
from .analysis import interval_matvec
from .errors import CarryUnsolvable, DimensionMismatch, InvalidBound, NoConvergence, UnboundedActivation
from .model import Activation, Box, Dnn, DnnLayer, Shifted

CARRY_RANGE = 1e6
CARRY_TOL = 1e-12


@dataclass(frozen=True)
class ShiftReport:
    original_sizes: Tuple[int, ...]
    new_sizes: Tuple[int, ...]
    bound: float
    carry_index: Tuple[Optional[int], ...]  # per layer 0..n; None for the output layer
    carry_weights: Tuple[float, ...]  # per hidden layer
    region: Optional[Box] = None

    def to_json(self):
        return {
            "original_sizes": list(self.original_sizes),
            "new_sizes": list(self.new_sizes),
            "bound": self.bound,
            "carry_index": list(self.carry_index),
            "carry_weights": list(self.carry_weights),
            "region": None
            if self.region is None
            else {"lo": self.region.lo.tolist(), "hi": self.region.hi.tolist()},
        }


def _hidden_post_bounds(n: Dnn, region: Optional[Box]):
    """Per hidden layer ``(lo, hi)`` of post-activation values over the region."""
    if region is None:
        lo = np.full(n.in_dim, -math.inf)
        hi = np.full(n.in_dim, math.inf)
    else:
        if region.dim != n.in_dim:
            raise DimensionMismatch(f"region of dim {region.dim}, network expects {n.in_dim}")
        lo, hi = region.lo, region.hi
    out = []
    for layer in n.layers[:-1]:
        z_lo, z_hi = interval_matvec(layer.weights, layer.weights, lo, hi)
        act = layer.activation
        hull = [act.image_hull(a, b) for a, b in zip(z_lo, z_hi)]
        lo = np.array([max(h[0], act.lower_bound()) for h in hull])
        hi = np.array([h[1] for h in hull])
        out.append((lo, hi))
    return out


def lower_bound_activations(n: Dnn, region: Optional[Box] = None) -> float:
    """Sound lower bound ``C <= 0`` on every hidden post-activation over ``region``.

    ``region=None`` means all of input space; then only activations whose
    range is bounded below (or bounded pre-activations) can be certified.
    The output layer keeps its activation under the shift, so it is not
    included.
    """
    c = 0.0
    for i, (lo, _) in enumerate(_hidden_post_bounds(n, region), start=1):
        if lo.size and not np.all(np.isfinite(lo)):
            raise UnboundedActivation(
                f"layer {i}: activation {n.layers[i - 1].activation!r} is not bounded below"
                " on the region"
            )
        if lo.size:
            c = min(c, float(lo.min()))
    return c


def _shortest_root(f, x: float) -> float:
    """Shortest decimal near ``x`` that hits the level as well as ``x`` does."""
    r = abs(f(x) - 1.0)
    for digits in range(1, 18):
        y = float(f"{x:.{digits}g}")
        if abs(f(y) - 1.0) <= r:
            return y
    return x


def solve_carry(act: Activation) -> float:
    """``k`` with ``act(k) = 1``, searched on ``[-1e6, 1e6]``."""
    f = act.scalar
    lo, hi = -CARRY_RANGE, CARRY_RANGE
    try:
        return _shortest_root(f, bisect_level(f, lo, hi, 1.0, CARRY_TOL, exact=True))
    except NoConvergence:
        pass
    # non-monotone activations: look for any bracketing pair on a coarse grid
    grid = np.concatenate([-np.logspace(6, -6, 200), [0.0], np.logspace(-6, 6, 200)])
    vals = np.array([f(x) for x in grid]) - 1.0
    for a, b, ga, gb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if (ga <= 0.0) != (gb <= 0.0):
            try:
                return _shortest_root(f, bisect_level(f, a, b, 1.0, CARRY_TOL, exact=True))
            except NoConvergence:
                continue
    raise CarryUnsolvable(f"{act!r} never attains 1; the constant cannot be carried")


def shift_dnn(n: Dnn, c: float, region: Optional[Box] = None) -> Tuple[Dnn, ShiftReport]:
    """Build ``N'`` with ``N'(x ++ [1]) = N(x)`` whenever ``c`` lower-bounds the hidden activations.

    The input gains a trailing constant-1 coordinate; each hidden layer gets
    activation ``Shifted(sigma, |c|)``, a last carry node mapping the constant
    to 1, and a carry column subtracting ``|c|`` times the row sums of the
    next layer's weights.
    """
    c = float(c)
    if not math.isfinite(c) or c > 0.0:
        raise InvalidBound(f"bound must be finite and <= 0, got {c!r}")
    if region is not None and region.dim != n.in_dim:
        raise DimensionMismatch(f"region of dim {region.dim}, network expects {n.in_dim}")
    s = abs(c)
    layers = []
    carry_weights = []
    last = len(n.layers) - 1
    for i, layer in enumerate(n.layers):
        w = layer.weights
        rows, cols = w.shape
        if i == 0:
            carry_col = np.zeros(rows)
        else:
            carry_col = -s * w.sum(axis=1)
        body = np.hstack([w, carry_col[:, None]])
        if i == last:
            layers.append(DnnLayer(body, layer.activation))
            continue
        act = Shifted(layer.activation, s)
        k = solve_carry(act)
        carry_weights.append(k)
        carry_row = np.zeros((1, cols + 1))
        carry_row[0, -1] = k
        layers.append(DnnLayer(np.vstack([body, carry_row]), act))
    shifted = Dnn(tuple(layers))
    sizes = n.sizes
    report = ShiftReport(
        tuple(sizes),
        tuple(shifted.sizes),
        c,
        tuple([s_ for s_ in sizes[:-1]] + [None]),
        tuple(carry_weights),
        region,
    )
    return shifted, report


def augment_input(x) -> np.ndarray:
    """Append the constant-1 coordinate expected by shifted networks."""
    return np.append(np.asarray(x, dtype=np.float64).reshape(-1), 1.0)
