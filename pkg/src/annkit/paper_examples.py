"""Golden reproductions of the worked examples.

Each entry recomputes a published value with the library and compares it
to the expected value stored in ``GOLDEN`` at tolerance ``tol``.  Entries
never raise: an exception inside an entry is reported as a failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .abstraction import (
    Ann,
    AnnLayer,
    LayerwisePartitioning,
    Partitioning,
    abstract_dnn,
    binary_decomposition,
    binary_mergings,
    enumerate_binary_pcms,
    is_pcm,
    merge,
    scale_cols,
)
from .analysis import interval_forward
from .domains import IntervalMatrix, OctagonMatrix, finite_alpha
from .errors import NegativeInput, WitnessFailed
from .model import Box, Dnn, Identity, LReLU, ReLU, Thresh
from .soundness import (
    build_nonneg_counterexample,
    build_wivp_counterexample,
    exact_membership_small,
    mean_rep,
    rep_box,
    witness_instantiation,
)
from .transform import augment_input, lower_bound_activations, shift_dnn

DEFAULT_TOL = 1e-9

# Expected values; tests may tamper with these as a negative control.
GOLDEN: Dict[str, object] = {
    "relu_out_at_1": [1.0, 1.0, 0.0],
    "lrelu_out_at_1": [0.5, 1.0, -0.5],
    "thresh_out_at_1": [1.0, 1.0, 0.0],
    "interval_net_range": [0.0, 3.0],
    "interval_net_inst_out": 1.0,
    "octagon_inst_out": 3.0,
    "walk_layer1_mergings": [[[1.0]], [[-1.0]]],
    "walk_layer2_mergings": [[[2.0], [2.0], [0.0]], [[2.0], [0.0], [2.0]]],
    "walk_a1": ([[-1.0]], [[1.0]]),
    "walk_a2": ([[2.0], [0.0], [0.0]], [[2.0], [2.0], [2.0]]),
    "decomp_input_pcms": [
        [[1.0, 0.0], [0.0, 0.0], [0.0, 1.0]],
        [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
    ],
    "decomp_output_pcms": [
        [[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]],
        [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]],
    ],
    # scaled binary mergings paired with their convex coefficient
    "decomp_terms": [
        ([[2.0, 3.0], [8.0, 6.0]], 0.375),
        ([[-4.0, 3.0], [-10.0, 6.0]], 0.125),
        ([[14.0, 9.0], [8.0, 6.0]], 0.375),
        ([[-16.0, 9.0], [-10.0, 6.0]], 0.125),
    ],
    "decomp_unscaled": [[1.75, 6.0], [1.75, 6.0]],
    "decomp_scaled": [[3.5, 6.0], [3.5, 6.0]],
    "mean_rep": [8.0, 3.0],
    "rep_box": ([5.0, 1.0], [11.0, 6.0]),
    "witness_pos_h1": [[0.5]],
    "witness_pos_h2": [[2.0], [2.0], [0.0]],
    "witness_neg_h1": [[-0.5]],
    "witness_neg_h2": [[2.0], [0.0], [2.0]],
    "nonneg_a1": ([[-1.0]], [[1.0]]),
    "nonneg_a2": ([[0.0], [0.0]], [[2.0], [2.0]]),
    "wivp_a1": ([[0.0]], [[1.0]]),
    "wivp_a2": ([[2.0]], [[2.0]]),
    "shift_bound": -0.5,
    "shift_w1": [[1.0, 0.0], [-1.0, 0.0], [0.0, 0.5]],
    "shift_w2": [[1.0, 1.0, -1.0], [1.0, 0.0, -0.5], [0.0, 1.0, -0.5]],
    "shift_hidden_at_m1": [0.0, 1.5, 1.0],
    "shift_out_at_m1": [0.5, -0.5, 1.0],
}

OUTPUT_WEIGHTS = [[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]
HIDDEN_WEIGHTS = [[1.0], [-1.0]]


def two_layer_net(act) -> Dnn:
    """``x -> [[1,1],[1,0],[0,1]] act([1;-1] x)``, the running example network."""
    return Dnn.from_layers([(HIDDEN_WEIGHTS, act), (OUTPUT_WEIGHTS, Identity())])


def merge_hidden() -> LayerwisePartitioning:
    """Keep input and output nodes, merge both hidden nodes."""
    return LayerwisePartitioning(
        (Partitioning.singleton(1), Partitioning.whole(2), Partitioning.singleton(3))
    )


@dataclass(frozen=True)
class Entry:
    id: str
    description: str
    run: Callable[["_Checks"], None]


class _Checks:
    """Collects named sub-checks for one entry."""

    def __init__(self, tol: float):
        self.tol = tol
        self.items: List[Dict] = []

    def close(self, name, got, want):
        got = np.asarray(got, dtype=np.float64)
        want = np.asarray(want, dtype=np.float64)
        ok = got.shape == want.shape and bool(np.all(np.abs(got - want) <= self.tol))
        self.items.append({"check": name, "ok": ok, "got": got.tolist(), "want": want.tolist()})
        return ok

    def truth(self, name, value, want=True):
        ok = bool(value) == want
        self.items.append({"check": name, "ok": ok, "got": bool(value), "want": want})
        return ok

    def interval(self, name, element, want):
        hull = element.interval_hull()
        self.close(name + ".lo", hull.lo, want[0])
        self.close(name + ".hi", hull.hi, want[1])

    def same_set(self, name, got, want):
        """Every matrix in ``want`` matches one in ``got`` (and the counts agree)."""
        got = [np.asarray(g, dtype=np.float64) for g in got]
        want = [np.asarray(w, dtype=np.float64) for w in want]
        ok = len(got) == len(want) and all(
            any(g.shape == w.shape and np.all(np.abs(g - w) <= self.tol) for g in got) for w in want
        )
        self.items.append(
            {"check": name, "ok": ok, "got": [g.tolist() for g in got], "want": [w.tolist() for w in want]}
        )


# ---------------------------------------------------------------------------
# Entries
# ---------------------------------------------------------------------------


def _two_layer_outputs(ck: _Checks):
    ck.close("relu f(1)", two_layer_net(ReLU())([1.0]), GOLDEN["relu_out_at_1"])
    ck.close("lrelu f(1)", two_layer_net(LReLU(0.5))([1.0]), GOLDEN["lrelu_out_at_1"])


def _interval_net_range(ck: _Checks):
    a1 = IntervalMatrix([[-1.0, 0.0], [-3.0, 1.0]], [[1.0, 2.0], [-2.0, 2.0]])
    a2 = IntervalMatrix([[0.0, 0.0]], [[1.0, 1.0]])
    ann = Ann((AnnLayer(a1, ReLU()), AnnLayer(a2, Identity())))
    out = interval_forward(ann, Box.point([1.0, 1.0]))
    ck.close("f((1,1)) range", [out.box.lo[0], out.box.hi[0]], GOLDEN["interval_net_range"])
    g1, g2 = np.array([[0.0, 2.0], [-2.5, 1.5]]), np.array([[0.5, 1.0]])
    ck.truth("g in gamma(f)", ann.contains_instantiation([g1, g2]))
    y = g2 @ np.maximum(g1 @ np.array([1.0, 1.0]), 0.0)
    ck.close("g((1,1))", y, [GOLDEN["interval_net_inst_out"]])
    ck.truth("g((1,1)) in f((1,1))", out.contains(y, ck.tol))


def octagon_example():
    """The two-layer octagon network used by the membership entry."""
    o1 = OctagonMatrix.from_constraints(
        (2, 1),
        [
            (((0, 1), (1, -1)), 1.0),
            (((0, -1), (1, 1)), 1.0),
            (((0, 1), (1, 1)), 2.0),
            (((0, -1), (1, -1)), 2.0),
        ],
    )
    o2 = OctagonMatrix.from_constraints(
        (1, 2),
        [
            (((0, 1), (1, -1)), 2.0),
            (((0, -1), (1, 1)), 3.0),
            (((0, 1), (1, 1)), 4.0),
            (((0, -1), (1, -1)), 5.0),
        ],
    )
    return Ann((AnnLayer(o1, ReLU()), AnnLayer(o2, Identity())))


def _octagon_membership(ck: _Checks):
    ann = octagon_example()
    g1, g2 = np.array([[0.5], [1.5]]), np.array([[3.0, 1.0]])
    ck.truth("[0.5; 1.5] in O1", ann.layers[0].weight.contains(g1, ck.tol))
    ck.truth("[3, 1] in O2", ann.layers[1].weight.contains(g2, ck.tol))
    ck.truth("[2; 0] not in O1", ann.layers[0].weight.contains(np.array([[2.0], [0.0]]), ck.tol), False)
    ck.truth("[3, 2] not in O2", ann.layers[1].weight.contains(np.array([[3.0, 2.0]]), ck.tol), False)
    y = g2 @ np.maximum(g1 @ np.array([1.0]), 0.0)
    ck.close("g(1)", y, [GOLDEN["octagon_inst_out"]])
    ck.truth("g(1) inside the relaxed output box", interval_forward(ann, Box.point([1.0])).contains(y, ck.tol))


def _walkthrough_weights(ck: _Checks):
    net, lp = two_layer_net(ReLU()), merge_hidden()
    ck.same_set("layer 1 binary mergings", binary_mergings(net.layers[0].weights, lp[0], lp[1]), GOLDEN["walk_layer1_mergings"])
    ck.same_set("layer 2 scaled binary mergings", binary_mergings(net.layers[1].weights, lp[1], lp[2]), GOLDEN["walk_layer2_mergings"])
    ann = abstract_dnn(net, lp, "interval")
    ck.interval("A1", ann.layers[0].weight, GOLDEN["walk_a1"])
    ck.interval("A2", ann.layers[1].weight, GOLDEN["walk_a2"])
    ck.truth("A1 activation kept", ann.layers[0].activation == ReLU())
    ck.truth("A2 activation kept", ann.layers[1].activation == Identity())


def _symbolic_merging(ck: _Checks):
    m = np.random.default_rng(20240917).uniform(-5.0, 5.0, size=(4, 3))
    p_in = Partitioning.from_one_indexed([[1, 3], [2]])
    p_out = Partitioning.from_one_indexed([[2, 4], [1, 3]])
    c = np.array([[0.25, 0.0], [0.0, 1.0], [0.75, 0.0]])
    d = np.array([[0.0, 0.99], [0.4, 0.0], [0.0, 0.01], [0.6, 0.0]])
    ck.truth("C is a PCM", is_pcm(c, p_in))
    ck.truth("D is a PCM", is_pcm(d, p_out))

    def e(i, j):
        return m[i - 1, j - 1]

    col1 = lambda i: 0.25 * e(i, 1) + 0.75 * e(i, 3)  # noqa: E731
    ck.close("MC", m @ c, [[col1(i), e(i, 2)] for i in range(1, 5)])
    merged = [
        [0.4 * col1(2) + 0.6 * col1(4), 0.4 * e(2, 2) + 0.6 * e(4, 2)],
        [0.99 * col1(1) + 0.01 * col1(3), 0.99 * e(1, 2) + 0.01 * e(3, 2)],
    ]
    ck.close("D^T M C", merge(m, c, d), merged)
    scaled = [
        [0.8 * col1(2) + 1.2 * col1(4), 0.8 * e(2, 2) + 1.2 * e(4, 2)],
        [1.98 * col1(1) + 0.02 * col1(3), 1.98 * e(1, 2) + 0.02 * e(3, 2)],
    ]
    ck.close("ScaleCols(D^T M C, (2, 2))", scale_cols(merge(m, c, d), [2, 2]), scaled)


def _binary_decomposition(ck: _Checks):
    m = np.array([[1.0, -2.0, 3.0], [4.0, -5.0, 6.0], [7.0, -8.0, 9.0]])
    p_in = Partitioning.from_one_indexed([[1, 2], [3]])
    p_out = Partitioning.from_one_indexed([[1, 3], [2]])
    ck.same_set("binary PCMs of the input partitioning", enumerate_binary_pcms(p_in), GOLDEN["decomp_input_pcms"])
    ck.same_set("binary PCMs of the output partitioning", enumerate_binary_pcms(p_out), GOLDEN["decomp_output_pcms"])
    mergings = binary_mergings(m, p_in, p_out)
    terms = GOLDEN["decomp_terms"]
    ck.same_set("scaled binary mergings", mergings, [t[0] for t in terms])

    c = np.array([[0.75, 0.0], [0.25, 0.0], [0.0, 1.0]])
    d = np.array([[0.5, 0.0], [0.0, 1.0], [0.5, 0.0]])
    ck.close("D^T M C", merge(m, c, d), GOLDEN["decomp_unscaled"])
    scaled = scale_cols(merge(m, c, d), p_in.sizes)
    ck.close("ScaleCols(D^T M C, (2, 1))", scaled, GOLDEN["decomp_scaled"])

    # coefficients in binary_mergings order: C outer, D inner
    coef = np.outer(binary_decomposition(c, p_in), binary_decomposition(d, p_out)).reshape(-1)
    for k, (mat, want) in enumerate(terms):
        hits = [i for i, r in enumerate(mergings) if np.all(np.abs(r - np.asarray(mat)) <= ck.tol)]
        got = coef[hits[0]] if hits else np.nan
        ck.close(f"coefficient of binary merging {k + 1}", got, want)
    ck.close("coefficients sum to 1", coef.sum(), 1.0)
    ck.close("convex combination reproduces the merging", np.tensordot(coef, mergings, axes=1), GOLDEN["decomp_scaled"])


def _mean_representative(ck: _Checks):
    v = [5.0, 6.0, 11.0, 2.0, 1.0]
    p = Partitioning.from_one_indexed([[1, 3], [2, 4, 5]])
    ck.close("mean representative", mean_rep(v, p), GOLDEN["mean_rep"])
    box = rep_box(v, p)
    ck.close("box lo", box.lo, GOLDEN["rep_box"][0])
    ck.close("box hi", box.hi, GOLDEN["rep_box"][1])


def _relu_witnesses(ck: _Checks):
    net, lp = two_layer_net(ReLU()), merge_hidden()
    ann = abstract_dnn(net, lp, "interval")
    for x, tag in ((1.0, "pos"), (-1.0, "neg")):
        w = witness_instantiation(net, ann, lp, [x])
        ck.close(f"H1 at x={x:g}", w.matrices[0], GOLDEN[f"witness_{tag}_h1"])
        ck.close(f"H2 at x={x:g}", w.matrices[1], GOLDEN[f"witness_{tag}_h2"])
        ck.close(f"witness output at x={x:g}", w.replay(), net([x]))
        ck.truth(f"witness in gamma at x={x:g}", ann.contains_instantiation(w.matrices, ck.tol))
        ck.truth(f"f({x:g}) in g({x:g})", exact_membership_small(ann, [x], net([x]), ck.tol))


def _leaky_relu_refuted(ck: _Checks):
    net, lp = two_layer_net(LReLU(0.5)), merge_hidden()
    ann = abstract_dnn(net, lp, "interval")
    ck.interval("A1", ann.layers[0].weight, GOLDEN["walk_a1"])
    ck.interval("A2", ann.layers[1].weight, GOLDEN["walk_a2"])
    y = net([1.0])
    ck.close("f(1)", y, GOLDEN["lrelu_out_at_1"])
    ck.truth("f(1) in g(1)", exact_membership_small(ann, [1.0], y, ck.tol), False)
    try:
        witness_instantiation(net, ann, lp, [1.0], force=True)
        ck.truth("forced witness fails on the sign condition", False)
    except WitnessFailed as exc:
        ck.truth("forced witness fails on the sign condition", NegativeInput.__name__ in exc.reason)


def _threshold_refuted(ck: _Checks):
    net, lp = two_layer_net(Thresh(1.0, 0.0)), merge_hidden()
    ann = abstract_dnn(net, lp, "interval")
    y = net([1.0])
    ck.close("f(1)", y, GOLDEN["thresh_out_at_1"])
    ck.interval("A1", ann.layers[0].weight, GOLDEN["walk_a1"])
    ck.truth("f(1) in g(1)", exact_membership_small(ann, [1.0], y, ck.tol), False)


def _powerset_binary_refuted(ck: _Checks):
    net, lp = two_layer_net(ReLU()), merge_hidden()
    ann = abstract_dnn(net, lp, "powerset", unsound_ok=True)
    ck.same_set("A1 members", ann.layers[0].weight.members, GOLDEN["walk_layer1_mergings"])
    ck.same_set("A2 members", ann.layers[1].weight.members, GOLDEN["walk_layer2_mergings"])
    y = net([1.0])
    ck.close("f(1)", y, GOLDEN["relu_out_at_1"])
    ck.truth("f(1) in powerset g(1)", exact_membership_small(ann, [1.0], y, ck.tol), False)
    # the hidden weight that would work lies in the hull but not in the set
    ck.truth("0.5 in A1", ann.layers[0].weight.contains([[0.5]], ck.tol), False)
    hull = Ann(tuple(AnnLayer(finite_alpha(l.weight.members).interval_hull(), l.activation) for l in ann.layers))
    ck.truth("f(1) in the interval hull network", exact_membership_small(hull, [1.0], y, ck.tol))


def _nonneg_counterexample(ck: _Checks):
    act = LReLU(0.5)
    net, lp = build_nonneg_counterexample(act, -1.0, 1.0)
    ann = abstract_dnn(net, lp, "interval")
    ck.interval("A1 = [x, y]", ann.layers[0].weight, GOLDEN["nonneg_a1"])
    ck.interval("A2", ann.layers[1].weight, GOLDEN["nonneg_a2"])
    y = net([1.0])
    ck.truth("N(1) has mixed signs", y[0] < 0.0 < y[1])
    ck.truth("N(1) in T(1)", exact_membership_small(ann, [1.0], y, ck.tol), False)


def _wivp_counterexample(ck: _Checks):
    act = Thresh(1.0, 0.0)
    net, lp = build_wivp_counterexample(act, [0.0, 1.0])
    ann = abstract_dnn(net, lp, "interval")
    ck.interval("A1 = [a_1, a_n]", ann.layers[0].weight, GOLDEN["wivp_a1"])
    ck.interval("A2 = [n, n]", ann.layers[1].weight, GOLDEN["wivp_a2"])
    ck.truth("N(1) in T(1)", exact_membership_small(ann, [1.0], net([1.0]), ck.tol), False)


def _shift_construction(ck: _Checks):
    net = two_layer_net(LReLU(0.5))
    region = Box([-1.0], [1.0])
    c = lower_bound_activations(net, region)
    ck.close("lower bound C", c, GOLDEN["shift_bound"])
    shifted, report = shift_dnn(net, c, region)
    ck.close("W'(1)", shifted.layers[0].weights, GOLDEN["shift_w1"])
    ck.close("W'(2)", shifted.layers[1].weights, GOLDEN["shift_w2"])
    tr = shifted.trace(augment_input([-1.0]))
    ck.close("hidden activations at x=-1", tr.post[1], GOLDEN["shift_hidden_at_m1"])
    ck.close("f'(-1)", tr.output, GOLDEN["shift_out_at_m1"])
    ck.close("f(-1)", net([-1.0]), GOLDEN["shift_out_at_m1"])
    ck.truth("one extra dimension per layer", all(b - a <= 1 for a, b in zip(report.original_sizes, report.new_sizes)))


ENTRIES: List[Entry] = [
    Entry("two-layer-outputs", "running example outputs with ReLU and leaky ReLU", _two_layer_outputs),
    Entry("interval-net-range", "interval network range on (1,1) and one instantiation", _interval_net_range),
    Entry("octagon-membership", "octagon weight membership and instantiation output", _octagon_membership),
    Entry("walkthrough-weights", "layer-wise abstraction of the running example", _walkthrough_weights),
    Entry("symbolic-merging", "merging and column scaling on a random assignment", _symbolic_merging),
    Entry("binary-decomposition", "binary mergings and convex coefficients of a merging", _binary_decomposition),
    Entry("mean-representative", "mean representative and representative box", _mean_representative),
    Entry("relu-witnesses", "instantiations reproducing the ReLU network", _relu_witnesses),
    Entry("leaky-relu-refuted", "leaky ReLU network is not over-approximated", _leaky_relu_refuted),
    Entry("threshold-refuted", "threshold network is not over-approximated", _threshold_refuted),
    Entry("powerset-binary-refuted", "binary-only powerset abstraction misses the output", _powerset_binary_refuted),
    Entry("nonneg-counterexample", "constructed network for the non-negativity condition", _nonneg_counterexample),
    Entry("wivp-counterexample", "constructed network for the WIVP condition", _wivp_counterexample),
    Entry("shift-construction", "shifted leaky ReLU network on [-1, 1]", _shift_construction),
]

ENTRY_IDS = tuple(e.id for e in ENTRIES)


def run_entry(entry: Entry, tol: float = DEFAULT_TOL) -> Dict:
    ck = _Checks(tol)
    error = None
    try:
        entry.run(ck)
    except Exception as exc:  # a crash is a failed reproduction, not a crash of the suite
        error = f"{type(exc).__name__}: {exc}"
    passed = error is None and bool(ck.items) and all(i["ok"] for i in ck.items)
    out = {"id": entry.id, "description": entry.description, "passed": passed, "checks": ck.items}
    if error is not None:
        out["error"] = error
    return out


def run_paper_examples(only: Optional[Sequence[str]] = None, tol: float = DEFAULT_TOL) -> List[Dict]:
    """Run all entries, or the ones named in ``only``; unknown names raise ``KeyError``."""
    selected = ENTRIES
    if only:
        unknown = [o for o in only if o not in ENTRY_IDS]
        if unknown:
            raise KeyError(f"unknown entries {unknown}; available: {', '.join(ENTRY_IDS)}")
        selected = [e for e in ENTRIES if e.id in set(only)]
    return [run_entry(e, tol) for e in selected]
