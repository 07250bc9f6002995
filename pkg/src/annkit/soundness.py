"""Constructive soundness: representatives, WIVP preimages, the instantiation
algorithm, end-to-end witnesses, exact membership for tiny ANNs and the
counterexample builders for the two necessary conditions.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from ._numeric import bisect_level
from .abstraction import (
    Ann,
    LayerwisePartitioning,
    Partitioning,
    abstract_dnn,
    scale_cols,
    merge,
)
from .domains import FiniteMatrixSet, IntervalMatrix
from .errors import (
    AnnkitError,
    DimensionMismatch,
    NegativeInput,
    PreconditionViolated,
    RepresentativeOutOfRange,
    UnsupportedExactMembership,
    WitnessFailed,
    WivpUnsupportedActivation,
)
from .model import Activation, Box, Dnn, Identity, as_matrix

BISECTION_TOL = 1e-12
LAYER_TOL = 1e-9
END_TO_END_TOL = 1e-6
GAMMA_EPS = 1e-9

__all__ = [
    "Box",
    "Witness",
    "mean_rep",
    "rep_box",
    "wivp_solve",
    "zeta",
    "zeta_with_pcms",
    "witness_instantiation",
    "precondition_issues",
    "exact_membership_small",
    "wivp_violated",
    "build_nonneg_counterexample",
    "build_wivp_counterexample",
]


def _vec(v, p: Partitioning):
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.shape[0] != p.n:
        raise DimensionMismatch(f"vector of length {v.shape[0]} vs partitioning over {p.n}")
    return v


def mean_rep(v, p: Partitioning) -> np.ndarray:
    v = _vec(v, p)
    return np.array([v[list(b)].sum() / len(b) for b in p.blocks])


def rep_box(v, p: Partitioning) -> Box:
    v = _vec(v, p)
    return Box([v[list(b)].min() for b in p.blocks], [v[list(b)].max() for b in p.blocks])


def wivp_solve(a: Activation, values: Sequence[float], tol: float = BISECTION_TOL) -> float:
    """Return ``b`` in ``[min(values), max(values)]`` with ``a(b)`` equal to the mean of ``a(values)``.

    Works for any continuous activation: the mean lies between the smallest
    and largest image, so bisection between the corresponding points
    brackets a preimage.
    """
    if not a.continuous:
        raise WivpUnsupportedActivation(f"{a!r} is not continuous; no WIVP preimage guaranteed")
    xs = sorted(float(x) for x in values)
    if not xs:
        raise ValueError("wivp_solve needs at least one point")
    if xs[0] == xs[-1]:
        return xs[0]
    ys = [a.scalar(x) for x in xs]
    target = math.fsum(ys) / len(ys)
    lo_i = min(range(len(xs)), key=lambda i: ys[i])
    hi_i = max(range(len(xs)), key=lambda i: ys[i])
    return bisect_level(a.scalar, xs[lo_i], xs[hi_i], target, tol, exact=True)


def zeta_with_pcms(m, p_in: Partitioning, p_out: Partitioning, v, w_prime, eps: float = GAMMA_EPS):
    """Instantiate a merging of ``m`` mapping ``mean_rep(v, p_in)`` to ``w_prime``.

    Returns ``(H, C, D)``.  Degenerate cases: a block of ``v`` summing to zero
    gets uniform weights; equal extremes in an output block put all weight on
    the (lowest-index) argmax.
    """
    m = as_matrix(m)
    v = _vec(v, p_in)
    w_prime = np.asarray(w_prime, dtype=np.float64).reshape(-1)
    if m.shape != (p_out.n, p_in.n):
        raise DimensionMismatch(f"matrix {m.shape} vs partitionings ({p_out.n}, {p_in.n})")
    if w_prime.shape[0] != p_out.k:
        raise DimensionMismatch(f"w' has length {w_prime.shape[0]}, expected {p_out.k}")

    c = np.zeros((p_in.n, p_in.k))
    for i, block in enumerate(p_in.blocks):
        idx = list(block)
        if len(idx) == 1:
            # a singleton block needs no sign condition: its only PCV is [1]
            c[idx[0], i] = 1.0
            continue
        if np.any(v[idx] < 0.0):
            raise NegativeInput(
                f"input block {i + 1} has negative entries {v[idx].tolist()}; "
                "merged nodes need non-negative values"
            )
        total = v[idx].sum()
        c[idx, i] = v[idx] / total if total > 0.0 else 1.0 / len(idx)

    w = m @ v
    d = np.zeros((p_out.n, p_out.k))
    for i, block in enumerate(p_out.blocks):
        idx = list(block)
        vals = w[idx]
        a = idx[int(np.argmax(vals))]
        b = idx[int(np.argmin(vals))]
        wa, wb = w[a], w[b]
        if not wb - eps <= w_prime[i] <= wa + eps:
            raise RepresentativeOutOfRange(
                f"w'[{i}] = {w_prime[i]!r} outside [{wb!r}, {wa!r}]"
            )
        if a == b or wa == wb:
            d[a, i] = 1.0
            continue
        t = min(max((w_prime[i] - wb) / (wa - wb), 0.0), 1.0)
        d[a, i] = t
        d[b, i] = 1.0 - t

    h = scale_cols(merge(m, c, d), p_in.sizes)
    return h, c, d


def zeta(m, p_in: Partitioning, p_out: Partitioning, v, w_prime) -> np.ndarray:
    return zeta_with_pcms(m, p_in, p_out, v, w_prime)[0]


# ---------------------------------------------------------------------------
# Witnesses
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Witness:
    """Instantiation of an ANN reproducing the DNN on one input.

    ``matrices[i]`` is the concrete weight for layer ``i+1``; ``w_prime[i]``
    its target pre-activation; ``mean_reps[i]`` is the mean representative of
    the DNN's ``v^(i)``; ``instantiated[i]`` the instantiation's own ``v'^(i)``.
    """

    input: np.ndarray
    matrices: Tuple[np.ndarray, ...]
    w_prime: Tuple[np.ndarray, ...]
    mean_reps: Tuple[np.ndarray, ...]
    instantiated: Tuple[np.ndarray, ...]
    expected: np.ndarray
    activations: Tuple[Activation, ...] = field(repr=False, default=())

    @property
    def output(self) -> np.ndarray:
        return self.instantiated[-1]

    @property
    def error(self) -> float:
        return float(np.max(np.abs(self.output - self.expected))) if self.output.size else 0.0

    def replay(self) -> np.ndarray:
        """Run the instantiated network on the input."""
        v = self.input
        for h, act in zip(self.matrices, self.activations):
            v = act(h @ v)
        return v

    def check(self, ann: Ann, eps: float = GAMMA_EPS, tol: float = END_TO_END_TOL) -> bool:
        return (
            ann.contains_instantiation(self.matrices, eps)
            and bool(np.all(np.abs(self.replay() - self.output) <= tol))
            and self.error <= tol
        )


def precondition_issues(n: Dnn, lp: LayerwisePartitioning) -> List[str]:
    """Reasons the soundness theorem does not cover ``(n, lp)``; empty when it does.

    Only hidden layers whose partitioning merges nodes matter: singleton
    blocks reproduce values exactly, whatever the activation.
    """
    issues = []
    for i in range(1, len(n.layers)):
        if lp[i].is_singleton:
            continue
        act = n.layers[i - 1].activation
        if not act.nonnegative:
            issues.append(f"layer {i}: activation {act!r} can output negative values")
        if not act.wivp:
            issues.append(f"layer {i}: activation {act!r} violates the WIVP")
    return issues


def witness_instantiation(
    n: Dnn,
    ann: Ann,
    lp: LayerwisePartitioning,
    v,
    force: bool = False,
    eps: float = GAMMA_EPS,
    tol: float = END_TO_END_TOL,
) -> Witness:
    """Build an instantiation of ``ann`` whose output on ``v`` equals ``n(v)``.

    Raises ``WitnessFailed`` on a precondition violation (unless ``force``)
    or when any intermediate guarantee does not hold.
    """
    lp.check_sizes(n.sizes)
    if ann.sizes != [p.k for p in lp.layers]:
        raise WitnessFailed(0, f"ANN sizes {ann.sizes} do not match the partitioning")
    if not force:
        issues = precondition_issues(n, lp)
        if issues:
            raise WitnessFailed(0, "; ".join(issues))

    trace = n.trace(v)
    matrices, w_primes, instantiated = [], [], [trace.post[0]]
    reps = [mean_rep(trace.post[0], lp[0])]
    for i, layer in enumerate(n.layers, start=1):
        p_in, p_out = lp[i - 1], lp[i]
        w = trace.pre[i - 1]
        act = layer.activation
        try:
            w_prime = np.array([wivp_solve(act, w[list(b)]) for b in p_out.blocks])
            h = zeta(layer.weights, p_in, p_out, trace.post[i - 1], w_prime)
        except (AnnkitError, ValueError) as exc:
            raise WitnessFailed(i, f"{type(exc).__name__}: {exc}") from exc
        if not ann.layers[i - 1].weight.contains(h, eps):
            raise WitnessFailed(i, "instantiated matrix lies outside the abstract weight")
        if np.max(np.abs(h @ reps[-1] - w_prime)) > LAYER_TOL:
            raise WitnessFailed(i, "instantiated layer misses the target pre-activation")
        rep = mean_rep(trace.post[i], p_out)
        if np.max(np.abs(act(w_prime) - rep)) > LAYER_TOL:
            raise WitnessFailed(i, "activation of w' differs from the mean representative")
        matrices.append(h)
        w_primes.append(w_prime)
        reps.append(rep)
        instantiated.append(act(h @ instantiated[-1]))

    witness = Witness(
        trace.post[0],
        tuple(matrices),
        tuple(w_primes),
        tuple(reps),
        tuple(instantiated),
        trace.output,
        tuple(l.activation for l in n.layers),
    )
    if not witness.error <= tol:
        raise WitnessFailed(len(n.layers), f"end-to-end error {witness.error:.3e} exceeds {tol}")
    return witness


# ---------------------------------------------------------------------------
# Exact membership for small ANNs
# ---------------------------------------------------------------------------

_ALL = [(-math.inf, math.inf)]


def _intersect(a, b):
    out = []
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            lo, hi = max(lo1, lo2), min(hi1, hi2)
            if lo <= hi:
                out.append((lo, hi))
    return sorted(out)


def _halfline(coef, bound, lo, hi):
    """``{h in [lo, hi] : coef * h <= bound}`` as a list of at most one interval."""
    if coef > 0:
        hi = min(hi, bound / coef)
    elif coef < 0:
        lo = max(lo, bound / coef)
    elif bound < 0:
        return []
    return [(lo, hi)] if lo <= hi else []


def _scale_feasible(u_lo, u_hi, y, eps):
    """Scalars ``h`` for which ``h * [u_lo, u_hi]`` meets ``[y - eps, y + eps]``."""
    pos = _intersect(_halfline(u_lo, y + eps, 0.0, math.inf), _halfline(-u_hi, -(y - eps), 0.0, math.inf))
    neg = _intersect(_halfline(u_hi, y + eps, -math.inf, 0.0), _halfline(-u_lo, -(y - eps), -math.inf, 0.0))
    return sorted(neg + pos)


def exact_membership_small(ann: Ann, v, y, eps: float = GAMMA_EPS) -> bool:
    """Decide whether some instantiation of ``ann`` maps ``v`` to within ``eps`` of ``y``.

    Supported: a two-layer interval ANN with one hidden node and identity
    output activation (solved with exact interval-set algebra over the hidden
    value), or any ANN whose weights are all finite sets (enumerated).
    """
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if v.shape[0] != ann.sizes[0] or y.shape[0] != ann.sizes[-1]:
        raise DimensionMismatch("input/output length does not match the ANN")

    if all(isinstance(l.weight, FiniteMatrixSet) for l in ann.layers):
        for hs in itertools.product(*(l.weight.members for l in ann.layers)):
            out = v
            for h, l in zip(hs, ann.layers):
                out = l.activation(h @ out)
            if np.all(np.abs(out - y) <= eps):
                return True
        return False

    if (
        len(ann.layers) == 2
        and ann.sizes[1] == 1
        and all(isinstance(l.weight, IntervalMatrix) for l in ann.layers)
        and isinstance(ann.layers[1].activation, Identity)
    ):
        first, second = ann.layers
        lo, hi = first.weight.lo[0], first.weight.hi[0]
        z_lo = float(np.minimum(lo * v, hi * v).sum())
        z_hi = float(np.maximum(lo * v, hi * v).sum())
        feasible = first.activation.image(z_lo, z_hi)
        u_lo, u_hi = second.weight.lo[:, 0], second.weight.hi[:, 0]
        for i in range(y.shape[0]):
            feasible = _intersect(feasible, _scale_feasible(u_lo[i], u_hi[i], y[i], eps))
            if not feasible:
                return False
        return True

    raise UnsupportedExactMembership(
        "exact membership needs a 2-layer interval ANN with one hidden node and "
        "identity output, or finite-set weights throughout"
    )


# ---------------------------------------------------------------------------
# Counterexample builders
# ---------------------------------------------------------------------------


def build_nonneg_counterexample(a: Activation, x: float, y: float) -> Tuple[Dnn, LayerwisePartitioning]:
    """Network ``I_2 a([x; y] v)`` whose interval abstraction misses ``N(1)``."""
    ax, ay = a.scalar(float(x)), a.scalar(float(y))
    if not (ax < 0.0 < ay):
        raise PreconditionViolated(f"need a(x) < 0 < a(y), got a(x)={ax!r}, a(y)={ay!r}")
    net = Dnn.from_layers([([[float(x)], [float(y)]], a), (np.eye(2), Identity())])
    lp = LayerwisePartitioning(
        (Partitioning.singleton(1), Partitioning.whole(2), Partitioning.singleton(2))
    )
    _assert_refuted(net, lp)
    return net, lp


def wivp_violated(a: Activation, points: Sequence[float], eps: float = GAMMA_EPS) -> bool:
    """True when no ``b`` in ``[min, max]`` has ``a(b)`` equal to the mean of ``a(points)``.

    Decided on the exact image of ``a`` over the range, which is a union of
    closed intervals (several for step activations).
    """
    xs = np.asarray(points, dtype=np.float64)
    target = math.fsum(a.scalar(float(x)) for x in xs) / len(xs)
    parts = a.image(float(xs.min()), float(xs.max()))
    return not any(p - eps <= target <= q + eps for p, q in parts)


def build_wivp_counterexample(a: Activation, points: Sequence[float]) -> Tuple[Dnn, LayerwisePartitioning]:
    """Network ``[1 ... 1] a((a_1..a_k)^T v)`` whose interval abstraction misses ``N(1)``."""
    pts = sorted(float(p) for p in points)
    if not pts:
        raise PreconditionViolated("need at least one point")
    if not wivp_violated(a, pts):
        raise PreconditionViolated(f"{a!r} does not violate the WIVP at {pts}")
    k = len(pts)
    net = Dnn.from_layers([(np.array(pts).reshape(k, 1), a), (np.ones((1, k)), Identity())])
    lp = LayerwisePartitioning(
        (Partitioning.singleton(1), Partitioning.whole(k), Partitioning.singleton(1))
    )
    _assert_refuted(net, lp)
    return net, lp


def _assert_refuted(net: Dnn, lp: LayerwisePartitioning):
    ann = abstract_dnn(net, lp, "interval")
    if exact_membership_small(ann, [1.0], net([1.0])):
        raise PreconditionViolated("constructed network is over-approximated; expected a refutation")
