import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annkit import (
    Dnn,
    Identity,
    LReLU,
    LayerwisePartitioning,
    Partitioning,
    ReLU,
    Shifted,
    Tanh,
    Thresh,
    abstract_dnn,
    ahat_bin,
    build_nonneg_counterexample,
    build_wivp_counterexample,
    exact_membership_small,
    is_pcm,
    mean_rep,
    rep_box,
    witness_instantiation,
    wivp_solve,
    zeta,
)
from annkit.abstraction import random_partitioning
from annkit.errors import (
    NegativeInput,
    PreconditionViolated,
    RepresentativeOutOfRange,
    UnsupportedExactMembership,
    WitnessFailed,
    WivpUnsupportedActivation,
)
from annkit.paper_examples import merge_hidden, two_layer_net
from annkit.soundness import precondition_issues, wivp_violated, zeta_with_pcms
from annkit.serialize import witness_from_json, witness_to_json

CONTINUOUS = [ReLU(), LReLU(0.5), Tanh(), Identity(), Shifted(Tanh(), 1.0), Thresh(0.5, 0.5)]


def test_mean_rep_and_box():
    p = Partitioning.from_one_indexed([[1, 3], [2, 4, 5]])
    v = [5, 6, 11, 2, 1]
    assert mean_rep(v, p).tolist() == [8.0, 3.0]
    box = rep_box(v, p)
    assert box.lo.tolist() == [5.0, 1.0] and box.hi.tolist() == [11.0, 6.0]
    assert box.contains(mean_rep(v, p))


@settings(max_examples=100, deadline=None)
@given(
    xs=st.lists(st.floats(-20, 20, allow_nan=False), min_size=1, max_size=6),
    idx=st.integers(0, len(CONTINUOUS) - 1),
)
def test_wivp_solve_hits_the_mean(xs, idx):
    act = CONTINUOUS[idx]
    b = wivp_solve(act, xs)
    assert min(xs) <= b <= max(xs)
    target = math.fsum(act.scalar(x) for x in xs) / len(xs)
    assert abs(act.scalar(b) - target) <= 1e-12


def test_wivp_solve_examples():
    assert wivp_solve(ReLU(), [-1.0, 1.0]) == 0.5
    assert abs(wivp_solve(Tanh(), [0.0, 1.0]) - math.atanh(math.tanh(1.0) / 2)) < 1e-12
    assert wivp_solve(ReLU(), [3.0]) == 3.0
    with pytest.raises(WivpUnsupportedActivation):
        wivp_solve(Thresh(1.0, 0.0), [0.0, 1.0])


@st.composite
def zeta_cases(draw):
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    n_in, n_out = int(rng.integers(1, 6)), int(rng.integers(1, 6))
    m = rng.uniform(-5, 5, size=(n_out, n_in))
    p_in, p_out = random_partitioning(n_in, rng), random_partitioning(n_out, rng)
    v = rng.uniform(0, 3, size=n_in)
    if draw(st.booleans()):
        v[list(p_in.blocks[0])] = 0.0
    w = m @ v
    w_prime = np.array([rng.uniform(w[list(b)].min(), w[list(b)].max()) for b in p_out.blocks])
    return m, p_in, p_out, v, w_prime


@settings(max_examples=150, deadline=None)
@given(zeta_cases())
def test_zeta_properties(case):
    m, p_in, p_out, v, w_prime = case
    h, c, d = zeta_with_pcms(m, p_in, p_out, v, w_prime)
    assert is_pcm(c, p_in) and is_pcm(d, p_out)
    assert np.max(np.abs(h @ mean_rep(v, p_in) - w_prime)) <= 1e-9
    assert ahat_bin(m, p_in, p_out, "interval").contains(h, 1e-9)
    assert ahat_bin(m, p_in, p_out, "octagon").contains(h, 1e-9)


def test_zeta_degenerate_cases():
    p_in = Partitioning.whole(2)
    p_out = Partitioning.whole(2)
    m = np.array([[1.0, 2.0], [1.0, 2.0]])
    # zero-sum input block: uniform column; equal extremes: all weight on the first row
    h, c, d = zeta_with_pcms(m, p_in, p_out, [0.0, 0.0], [0.0])
    assert c[:, 0].tolist() == [0.5, 0.5]
    assert d[:, 0].tolist() == [1.0, 0.0]
    assert h.tolist() == [[3.0]]


def test_zeta_errors():
    p = Partitioning.whole(2)
    with pytest.raises(NegativeInput):
        zeta(np.eye(2), p, Partitioning.singleton(2), [1.0, -0.5], [1.0, -0.5])
    with pytest.raises(RepresentativeOutOfRange):
        zeta(np.eye(2), Partitioning.singleton(2), p, [1.0, 2.0], [5.0])
    # singleton input blocks may carry any sign
    h = zeta(np.array([[1.0], [-1.0]]), Partitioning.singleton(1), p, [-1.0], [0.5])
    assert h.tolist() == [[-0.5]]


def test_relu_witnesses_match_the_worked_instantiations():
    net, lp = two_layer_net(ReLU()), merge_hidden()
    ann = abstract_dnn(net, lp, "interval")
    w = witness_instantiation(net, ann, lp, [1.0])
    assert w.matrices[0].tolist() == [[0.5]] and w.matrices[1].tolist() == [[2.0], [2.0], [0.0]]
    w = witness_instantiation(net, ann, lp, [-1.0])
    assert w.matrices[0].tolist() == [[-0.5]] and w.matrices[1].tolist() == [[2.0], [0.0], [2.0]]
    assert w.output.tolist() == net([-1.0]).tolist() == w.replay().tolist()
    assert w.check(ann)
    w0 = witness_instantiation(net, ann, lp, [0.0])
    assert w0.error == 0.0


def test_witness_serialization_round_trip():
    net, lp = two_layer_net(ReLU()), merge_hidden()
    ann = abstract_dnn(net, lp, "octagon")
    w = witness_instantiation(net, ann, lp, [0.7])
    back = witness_from_json(witness_to_json(w))
    assert all(np.array_equal(a, b) for a, b in zip(back.matrices, w.matrices))
    assert np.array_equal(back.replay(), w.replay()) and back.check(ann)


def test_preconditions():
    lp = merge_hidden()
    assert precondition_issues(two_layer_net(ReLU()), lp) == []
    assert len(precondition_issues(two_layer_net(LReLU(0.5)), lp)) == 1
    assert len(precondition_issues(two_layer_net(Thresh(1.0, -1.0)), lp)) == 2
    # no merging, no conditions
    assert precondition_issues(two_layer_net(LReLU(0.5)), LayerwisePartitioning.identity([1, 2, 3])) == []


def test_witness_refuses_or_fails_when_preconditions_fail():
    net, lp = two_layer_net(LReLU(0.5)), merge_hidden()
    ann = abstract_dnn(net, lp, "interval")
    with pytest.raises(WitnessFailed) as exc:
        witness_instantiation(net, ann, lp, [1.0])
    assert exc.value.layer == 0
    with pytest.raises(WitnessFailed) as exc:
        witness_instantiation(net, ann, lp, [1.0], force=True)
    assert exc.value.layer == 2 and "NegativeInput" in exc.value.reason
    # input 0 is reproduced even without the conditions
    assert witness_instantiation(net, ann, lp, [0.0], force=True).error == 0.0


def test_witness_on_random_eligible_networks():
    rng = np.random.default_rng(11)
    for k in range(30):
        sizes = [2, int(rng.integers(1, 5)), int(rng.integers(1, 5)), 2]
        acts = [ReLU(), Shifted(Tanh(), 1.0), Shifted(LReLU(0.3), 1.0)]
        layers = []
        for i in range(1, len(sizes)):
            act = Identity() if i == len(sizes) - 1 else acts[int(rng.integers(3))]
            layers.append((rng.uniform(-2, 2, size=(sizes[i], sizes[i - 1])), act))
        net = Dnn.from_layers(layers)
        lp = LayerwisePartitioning(
            (Partitioning.singleton(2), *(random_partitioning(s, rng) for s in sizes[1:-1]), Partitioning.singleton(2))
        )
        ann = abstract_dnn(net, lp, ("interval", "octagon")[k % 2])
        for x in rng.uniform(-3, 3, size=(5, 2)):
            w = witness_instantiation(net, ann, lp, x)
            assert w.error <= 1e-6 and w.check(ann)


# ---------------------------------------------------------------------------
# Exact membership against a grid oracle
# ---------------------------------------------------------------------------


def grid_member(ann, x, y, eps, points=100_001):
    """Oracle: sweep the scalar hidden weight on a grid; the output weights are
    solved per coordinate (y_i must lie in z * [lo_i, hi_i])."""
    first, second = ann.layers
    hs = np.linspace(first.weight.lo[0, 0], first.weight.hi[0, 0], points)
    z = first.activation(hs * x)
    lo, hi = second.weight.lo[:, 0], second.weight.hi[:, 0]
    a, b = np.outer(z, lo), np.outer(z, hi)
    lo_out, hi_out = np.minimum(a, b), np.maximum(a, b)
    ok = np.all((y >= lo_out - eps) & (y <= hi_out + eps), axis=1)
    return bool(ok.any())


@pytest.mark.parametrize("act", [ReLU(), LReLU(0.5), Thresh(1.0, 0.0)], ids=repr)
def test_exact_membership_agrees_with_grid(act):
    net, lp = two_layer_net(act), merge_hidden()
    ann = abstract_dnn(net, lp, "interval")
    rng = np.random.default_rng(5)
    targets = [(x, net([x])) for x in (1.0, -1.0, 0.5, 2.0)]
    targets += [(float(x), rng.uniform(-1, 3, size=3)) for x in rng.uniform(-2, 2, size=15)]
    targets += [(1.0, np.array([1.0, 1.0, 1.0])), (1.0, np.array([1.0, 0.5, 0.5]))]
    for x, y in targets:
        exact = exact_membership_small(ann, [x], y, 1e-9)
        if grid_member(ann, x, y, 1e-9):
            assert exact, (x, y)
        if exact:
            assert grid_member(ann, x, y, 1e-3), (x, y)


def test_refutation_membership_verdicts():
    lp = merge_hidden()
    for act, member in ((ReLU(), True), (LReLU(0.5), False), (Thresh(1.0, 0.0), False)):
        net = two_layer_net(act)
        ann = abstract_dnn(net, lp, "interval")
        assert exact_membership_small(ann, [1.0], net([1.0])) is member
    net = two_layer_net(ReLU())
    ps = abstract_dnn(net, lp, "powerset", unsound_ok=True)
    assert exact_membership_small(ps, [1.0], net([1.0])) is False
    assert exact_membership_small(ps, [1.0], [2.0, 2.0, 0.0]) is True


def test_exact_membership_unsupported():
    net = Dnn.from_layers([(np.ones((2, 1)), ReLU()), (np.ones((1, 2)), Identity())])
    ann = abstract_dnn(net, LayerwisePartitioning.identity(net.sizes), "interval")
    with pytest.raises(UnsupportedExactMembership):
        exact_membership_small(ann, [1.0], [2.0])


# ---------------------------------------------------------------------------
# Counterexample builders
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "act,x,y",
    [(LReLU(0.5), -1.0, 1.0), (Tanh(), -0.5, 2.0), (Identity(), -3.0, 0.25), (Thresh(0.0, -1.0), -1.0, 1.0)],
    ids=repr,
)
def test_nonneg_counterexample(act, x, y):
    net, lp = build_nonneg_counterexample(act, x, y)
    ann = abstract_dnn(net, lp, "interval")
    assert ann.layers[0].weight.lo.tolist() == [[x]] and ann.layers[0].weight.hi.tolist() == [[y]]
    assert ann.layers[1].weight.lo.tolist() == [[0.0], [0.0]]
    assert ann.layers[1].weight.hi.tolist() == [[2.0], [2.0]]
    assert not exact_membership_small(ann, [1.0], net([1.0]))
    with pytest.raises(PreconditionViolated):
        build_nonneg_counterexample(ReLU(), -1.0, 1.0)


@pytest.mark.parametrize(
    "act,points",
    [(Thresh(1.0, 0.0), [0.0, 1.0]), (Thresh(1.0, 0.0), [0.0, 1.0, 1.0]), (Thresh(0.0, 2.0), [-1.0, 0.5])],
    ids=repr,
)
def test_wivp_counterexample(act, points):
    assert wivp_violated(act, points)
    net, lp = build_wivp_counterexample(act, points)
    ann = abstract_dnn(net, lp, "interval")
    n = len(points)
    assert ann.layers[1].weight.lo.tolist() == [[float(n)]] == ann.layers[1].weight.hi.tolist()
    assert not exact_membership_small(ann, [1.0], net([1.0]))


def test_wivp_holds_for_continuous_activations():
    for act in CONTINUOUS:
        assert not wivp_violated(act, [-1.0, 0.3, 2.0])
    with pytest.raises(PreconditionViolated):
        build_wivp_counterexample(ReLU(), [0.0, 1.0])
