"""Seeded randomized property suites.

Every suite returns a JSON-able summary with trial and failure counts, the
worst observed error and a digest of all per-trial results, so two runs
with the same seed can be compared byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from typing import Dict, List, Optional, Sequence

import numpy as np

from .abstraction import (
    Ann,
    AnnLayer,
    abstract_dnn,
    ahat_bin,
    is_pcm,
    merge,
    random_layerwise_partitioning,
    random_partitioning,
    random_pcm,
    scale_cols,
)
from .analysis import interval_forward
from .domains import IntervalMatrix
from .errors import AnnkitError
from .model import Box, Dnn, Identity, LReLU, ReLU, Shifted, Tanh
from .paper_examples import merge_hidden, two_layer_net
from .soundness import exact_membership_small, mean_rep, witness_instantiation, zeta_with_pcms
from .transform import augment_input, lower_bound_activations, shift_dnn

GAMMA_EPS = 1e-9
LAYER_TOL = 1e-9
END_TO_END_TOL = 1e-6
SHIFT_TOL = 1e-9
MAX_FAILURES_REPORTED = 5


def eligible_activations():
    """Hidden activations covered by the soundness theorem (non-negative, continuous)."""
    return [ReLU(), Shifted(LReLU(0.3), 1.0), Shifted(LReLU(0.3), 2.5), Shifted(Tanh(), 1.0)]


# One family per network.  The carry needs max(sigma + |C|, 0) to reach 1,
# which fails for ReLU once |C| > 1 and for tanh once |C| >= 2, so bounded-below
# activations are not mixed with ones that drive C further down.
SHIFT_FAMILIES = (
    [LReLU(0.3), LReLU(0.1)],
    [Tanh()],
    [LReLU(0.5), Identity()],
    [ReLU()],
)


def random_sizes(rng, depth_range=(2, 4), width_range=(1, 5), in_range=(1, 3), out_range=(1, 3)) -> List[int]:
    depth = int(rng.integers(depth_range[0], depth_range[1] + 1))
    hidden = [int(rng.integers(width_range[0], width_range[1] + 1)) for _ in range(depth - 1)]
    return [int(rng.integers(in_range[0], in_range[1] + 1)), *hidden, int(rng.integers(out_range[0], out_range[1] + 1))]


def random_dnn(rng, sizes: Sequence[int], hidden_acts, out_act=None, scale=2.0) -> Dnn:
    layers = []
    for i in range(1, len(sizes)):
        w = rng.uniform(-scale, scale, size=(sizes[i], sizes[i - 1]))
        if i == len(sizes) - 1:
            act = out_act if out_act is not None else Identity()
        else:
            act = hidden_acts[int(rng.integers(len(hidden_acts)))]
        layers.append((w, act))
    return Dnn.from_layers(layers)


class _Tally:
    def __init__(self, name: str):
        self.name = name
        self.trials = 0
        self.failures: List[Dict] = []
        self.max_error = 0.0
        self.hasher = hashlib.sha256()

    def record(self, ok: bool, error: float = 0.0, detail: Optional[Dict] = None, payload=None):
        self.trials += 1
        self.max_error = max(self.max_error, float(error))
        self.hasher.update(repr((bool(ok), float(error), payload)).encode())
        if not ok:
            self.failures.append(dict(detail or {}, trial=self.trials - 1))

    def summary(self, **extra) -> Dict:
        out = {
            "suite": self.name,
            "trials": self.trials,
            "failures": len(self.failures),
            "passed": not self.failures and self.trials > 0,
            "max_error": self.max_error if np.isfinite(self.max_error) else None,
            "digest": self.hasher.hexdigest(),
            "failure_examples": self.failures[:MAX_FAILURES_REPORTED],
        }
        out.update(extra)
        if extra.get("must_hold") is False:
            out["passed"] = False
        return out


def _round(a):
    return np.round(np.asarray(a, dtype=np.float64), 12).tolist()


# ---------------------------------------------------------------------------
# Non-binary mergings are covered by the binary-merging abstraction
# ---------------------------------------------------------------------------


def binary_merging_coverage(trials: int = 1000, seed: int = 0) -> Dict:
    rng = np.random.default_rng(seed)
    tally = _Tally("binary-merging-coverage")
    for t in range(trials):
        domain = ("interval", "octagon")[t % 2]
        n_in, n_out = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        m = rng.uniform(-5.0, 5.0, size=(n_out, n_in))
        p_in, p_out = random_partitioning(n_in, rng), random_partitioning(n_out, rng)
        element = ahat_bin(m, p_in, p_out, domain)
        c, d = random_pcm(p_in, rng), random_pcm(p_out, rng)
        h = scale_cols(merge(m, c, d), p_in.sizes)
        ok = element.contains(h, GAMMA_EPS)
        tally.record(ok, payload=_round(h), detail={"domain": domain, "merging": h.tolist()})

    # a non-convex domain must miss some merging: the running ReLU example
    net, lp = two_layer_net(ReLU()), merge_hidden()
    ps = ahat_bin(net.layers[0].weights, lp[0], lp[1], "powerset")
    half = merge(net.layers[0].weights, np.ones((1, 1)), np.array([[0.75], [0.25]]))
    ann = abstract_dnn(net, lp, "powerset", unsound_ok=True)
    missed = (not ps.contains(half, GAMMA_EPS)) and not exact_membership_small(ann, [1.0], net([1.0]))
    return tally.summary(
        powerset_counterexample_found=bool(missed),
        powerset_counterexample={"merging": half.tolist(), "input": [1.0], "output": net([1.0]).tolist()},
        must_hold=bool(missed),
    )


# ---------------------------------------------------------------------------
# Instantiation algorithm
# ---------------------------------------------------------------------------


def zeta_suite(trials: int = 1000, seed: int = 1) -> Dict:
    rng = np.random.default_rng(seed)
    tally = _Tally("instantiation")
    for _ in range(trials):
        n_in, n_out = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        m = rng.uniform(-5.0, 5.0, size=(n_out, n_in))
        p_in, p_out = random_partitioning(n_in, rng), random_partitioning(n_out, rng)
        v = rng.uniform(0.0, 3.0, size=n_in)
        if rng.random() < 0.1:
            v[list(p_in.blocks[0])] = 0.0  # exercise the zero-sum block
        w = m @ v
        w_prime = np.array([rng.uniform(w[list(b)].min(), w[list(b)].max()) for b in p_out.blocks])
        detail = {"m": m.tolist(), "v": v.tolist(), "w_prime": w_prime.tolist()}
        try:
            h, c, d = zeta_with_pcms(m, p_in, p_out, v, w_prime)
        except AnnkitError as exc:
            tally.record(False, np.inf, dict(detail, error=str(exc)))  # inf marks an exception
            continue
        err = float(np.max(np.abs(h @ mean_rep(v, p_in) - w_prime)))
        in_gamma = ahat_bin(m, p_in, p_out, "interval").contains(h, GAMMA_EPS)
        ok = in_gamma and err <= LAYER_TOL and is_pcm(c, p_in) and is_pcm(d, p_out)
        tally.record(ok, err, dict(detail, in_gamma=in_gamma, error=err), payload=_round(h))
    return tally.summary()


# ---------------------------------------------------------------------------
# End-to-end witnesses
# ---------------------------------------------------------------------------


def _witness_trials(tally, net, lp, ann, inputs):
    for x in inputs:
        try:
            w = witness_instantiation(net, ann, lp, x)
            err = w.error
            ok = err <= END_TO_END_TOL and w.check(ann)
            tally.record(ok, err, {"input": list(map(float, x)), "error": err}, payload=_round(w.output))
        except AnnkitError as exc:
            tally.record(False, np.inf, {"input": list(map(float, x)), "error": str(exc)})


def witness_suite(networks: int = 200, inputs: int = 10, seed: int = 2) -> Dict:
    rng = np.random.default_rng(seed)
    tally = _Tally("end-to-end-witness")
    acts = eligible_activations()
    for k in range(networks):
        sizes = random_sizes(rng)
        net = random_dnn(rng, sizes, acts)
        lp = random_layerwise_partitioning(sizes, rng)
        ann = abstract_dnn(net, lp, ("interval", "octagon")[k % 2])
        xs = rng.uniform(-3.0, 3.0, size=(inputs, sizes[0]))
        _witness_trials(tally, net, lp, ann, xs)
    return tally.summary()


def shifted_witness_suite(networks: int = 50, inputs: int = 10, seed: int = 3) -> Dict:
    """Shift leaky ReLU / tanh networks on a box, then abstract and witness the result."""
    rng = np.random.default_rng(seed)
    tally = _Tally("shifted-end-to-end-witness")
    for k in range(networks):
        sizes = random_sizes(rng)
        net = random_dnn(rng, sizes, SHIFT_FAMILIES[k % 2])
        half = rng.uniform(0.5, 2.0, size=sizes[0])
        region = Box(-half, half)
        shifted, _ = shift_dnn(net, lower_bound_activations(net, region), region)
        lp = random_layerwise_partitioning(shifted.sizes, rng)
        ann = abstract_dnn(shifted, lp, ("interval", "octagon")[k % 2])
        xs = rng.uniform(-half, half, size=(inputs, sizes[0]))
        for x in xs:
            try:
                w = witness_instantiation(shifted, ann, lp, augment_input(x))
                err = float(np.max(np.abs(w.output - net(x))))
                ok = err <= END_TO_END_TOL and w.check(ann)
                tally.record(ok, err, {"input": x.tolist(), "error": err}, payload=_round(w.output))
            except AnnkitError as exc:
                tally.record(False, np.inf, {"input": x.tolist(), "error": str(exc)})
    return tally.summary()


# ---------------------------------------------------------------------------
# Shift construction
# ---------------------------------------------------------------------------


def shift_suite(networks: int = 50, samples: int = 20, seed: int = 4) -> Dict:
    rng = np.random.default_rng(seed)
    tally = _Tally("shift-construction")
    for k in range(networks):
        sizes = random_sizes(rng)
        net = random_dnn(rng, sizes, SHIFT_FAMILIES[k % len(SHIFT_FAMILIES)])
        lo = rng.uniform(-2.0, 0.0, size=sizes[0])
        hi = lo + rng.uniform(0.1, 3.0, size=sizes[0])
        region = Box(lo, hi)
        c = lower_bound_activations(net, region)
        shifted, report = shift_dnn(net, c, region)
        extra_ok = all(0 <= b - a <= 1 for a, b in zip(report.original_sizes, report.new_sizes))
        for x in rng.uniform(lo, hi, size=(samples, sizes[0])):
            tr = shifted.trace(augment_input(x))
            err = float(np.max(np.abs(tr.output - net(x))))
            nonneg = all(bool(np.all(p >= 0.0)) for p in tr.post[1:-1])
            ok = err <= SHIFT_TOL and nonneg and extra_ok
            tally.record(ok, err, {"input": x.tolist(), "error": err, "nonneg": nonneg}, payload=_round(tr.output))
    return tally.summary()


# ---------------------------------------------------------------------------
# Interval analysis
# ---------------------------------------------------------------------------


def _random_inn(rng, sizes, acts):
    layers = []
    for i in range(1, len(sizes)):
        centre = rng.uniform(-2.0, 2.0, size=(sizes[i], sizes[i - 1]))
        radius = rng.uniform(0.0, 1.0, size=centre.shape)
        act = Identity() if i == len(sizes) - 1 else acts[int(rng.integers(len(acts)))]
        layers.append(AnnLayer(IntervalMatrix(centre - radius, centre + radius), act))
    return Ann(tuple(layers))


def analysis_suite(anns: int = 10, samples: int = 1000, networks: int = 100, inputs: int = 10, seed: int = 5) -> Dict:
    rng = np.random.default_rng(seed)
    tally = _Tally("interval-analysis")
    acts = [ReLU(), LReLU(0.3), Tanh(), Identity(), Shifted(Tanh(), 1.0)]
    for _ in range(anns):
        sizes = random_sizes(rng)
        ann = _random_inn(rng, sizes, acts)
        lo = rng.uniform(-2.0, 0.0, size=sizes[0])
        hi = lo + rng.uniform(0.0, 2.0, size=sizes[0])
        out = interval_forward(ann, Box(lo, hi))
        for _ in range(samples):
            v = rng.uniform(lo, hi)
            for layer in ann.layers:
                h = rng.uniform(layer.weight.lo, layer.weight.hi)
                v = layer.activation(h @ v)
            ok = out.contains(v, GAMMA_EPS)
            tally.record(ok, 0.0, {"output": v.tolist()}, payload=_round(v))

    # concrete outputs of eligible networks lie inside the bounds of their abstraction
    eligible = eligible_activations()
    for k in range(networks):
        sizes = random_sizes(rng)
        net = random_dnn(rng, sizes, eligible)
        lp = random_layerwise_partitioning(sizes, rng)
        ann = abstract_dnn(net, lp, ("interval", "octagon")[k % 2])
        for x in rng.uniform(-3.0, 3.0, size=(inputs, sizes[0])):
            y = net(x)
            ok = interval_forward(ann, Box.point(x)).contains(y, GAMMA_EPS)
            tally.record(ok, 0.0, {"input": x.tolist()}, payload=_round(y))
    return tally.summary()


# ---------------------------------------------------------------------------
# Everything
# ---------------------------------------------------------------------------


SUITES = {
    "binary-merging-coverage": binary_merging_coverage,
    "instantiation": zeta_suite,
    "end-to-end-witness": witness_suite,
    "shifted-end-to-end-witness": shifted_witness_suite,
    "shift-construction": shift_suite,
    "interval-analysis": analysis_suite,
}


def run_all(seed: int = 0) -> Dict:
    """Run every suite; suite ``i`` is seeded with ``seed + i``."""
    reports = [fn(seed=seed + i) for i, fn in enumerate(SUITES.values())]
    return {"seed": seed, "passed": all(r["passed"] for r in reports), "suites": reports}


def report_bytes(report: Dict) -> bytes:
    return (json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n").encode()
