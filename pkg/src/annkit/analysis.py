"""Interval outer bounds on ANN outputs and size-reduction reporting."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from .abstraction import Ann, LayerwisePartitioning
from .domains import IntervalMatrix
from .errors import DimensionMismatch, NonMonotoneActivation, PartitioningMismatch
from .model import Activation, Box, Dnn


def interval_matvec(w_lo, w_hi, x_lo, x_hi) -> Tuple[np.ndarray, np.ndarray]:
    """Exact interval product of an interval matrix with an interval vector.

    Each scalar product takes the min/max of its four endpoint products;
    ``0 * inf`` is taken as ``0`` so unbounded inputs stay usable.
    """
    with np.errstate(invalid="ignore"):
        cands = np.stack(
            [
                w_lo * x_lo[None, :],
                w_lo * x_hi[None, :],
                w_hi * x_lo[None, :],
                w_hi * x_hi[None, :],
            ]
        )
    cands = np.where(np.isnan(cands), 0.0, cands)
    with np.errstate(invalid="ignore"):
        lo = cands.min(axis=0).sum(axis=1)
        hi = cands.max(axis=0).sum(axis=1)
    # inf + -inf cannot occur: a row's lower sum only collects -inf candidates
    return lo, hi


def apply_monotone(act: Activation, lo, hi) -> Tuple[np.ndarray, np.ndarray]:
    if not act.monotone:
        raise NonMonotoneActivation(f"{act!r} is not monotone")
    return act(lo), act(hi)


@dataclass(frozen=True)
class OutputBox:
    box: Box
    provenance: Tuple[str, ...] = ()

    def contains(self, y, eps: float = 1e-9) -> bool:
        return self.box.contains(y, eps)


def interval_forward(ann: Ann, input_box: Box) -> OutputBox:
    """Box containing ``g(v)`` for every instantiation ``g`` and every ``v`` in the input box."""
    if input_box.dim != ann.sizes[0]:
        raise DimensionMismatch(f"input box of dim {input_box.dim}, ANN expects {ann.sizes[0]}")
    for i, layer in enumerate(ann.layers, start=1):
        if not layer.activation.monotone:
            raise NonMonotoneActivation(f"layer {i}: {layer.activation!r} is not monotone")
    lo, hi = input_box.lo, input_box.hi
    notes: List[str] = []
    for i, layer in enumerate(ann.layers, start=1):
        hull = layer.weight.interval_hull()
        if not isinstance(layer.weight, IntervalMatrix):
            notes.append(f"layer {i}: {layer.domain} relaxed to its interval hull")
        lo, hi = interval_matvec(hull.lo, hull.hi, lo, hi)
        lo, hi = apply_monotone(layer.activation, lo, hi)
    return OutputBox(Box(lo, hi), tuple(notes))


def reduction_report(n: Dnn, ann: Ann, lp: LayerwisePartitioning) -> Dict:
    lp.check_sizes(n.sizes)
    after = [p.k for p in lp.layers]
    if ann.sizes != after:
        raise PartitioningMismatch(f"ANN sizes {ann.sizes} vs partitioning block counts {after}")
    before = n.sizes
    layers = []
    for i, (b, a) in enumerate(zip(before, after)):
        layers.append({"layer": i, "nodes_before": b, "nodes_after": a, "reduction": 1.0 - a / b})
    weights = [
        {"layer": i, "domain": l.domain, "shape": list(l.weight.shape), "size": l.weight.size()}
        for i, l in enumerate(ann.layers, start=1)
    ]
    return {
        "layers": layers,
        "weights": weights,
        "total_nodes_before": sum(before),
        "total_nodes_after": sum(after),
        "total_reduction": 1.0 - sum(after) / sum(before),
    }
