import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annkit import Box, Dnn, DnnLayer, Identity, LReLU, ReLU, Shifted, Tanh, Thresh, eval_dnn
from annkit.errors import DimensionMismatch, ShapeMismatch, ValidationError
from annkit.model import activation_lower_bound, eval_activation

finite = st.floats(min_value=-50, max_value=50, allow_nan=False)

ACTS = [
    Identity(),
    ReLU(),
    LReLU(0.5),
    LReLU(0.0),
    LReLU(-0.2),
    Tanh(),
    Thresh(1.0, 0.0),
    Thresh(0.5, 0.5),
    Thresh(-1.0, 2.0),
    Shifted(LReLU(0.5), 0.5),
    Shifted(Tanh(), 1.0),
    Shifted(Thresh(1.0, 0.0), 0.25),
]


def test_activation_values():
    assert eval_activation(ReLU(), -2.0) == 0.0
    assert eval_activation(LReLU(0.5), -2.0) == -1.0
    assert eval_activation(LReLU(0.5), 3.0) == 3.0
    assert eval_activation(Thresh(1.0, 0.0), 1.0) == 1.0
    assert eval_activation(Thresh(1.0, 0.0), 0.999) == 0.0
    assert eval_activation(Tanh(), 0.3) == math.tanh(0.3)
    assert eval_activation(Shifted(LReLU(0.5), 0.5), -1.0) == 0.0
    assert eval_activation(Shifted(LReLU(0.5), 0.5), -3.0) == 0.0
    assert eval_activation(Shifted(LReLU(0.5), 0.5), 1.0) == 1.5


@pytest.mark.parametrize("act", ACTS, ids=repr)
def test_vectorised_matches_scalar(act):
    xs = np.linspace(-4, 4, 161)
    # numpy and math tanh may differ in the last ulp (absolute after the shift)
    np.testing.assert_allclose(act(xs), [act.scalar(x) for x in xs], rtol=1e-15, atol=1e-15)


@pytest.mark.parametrize(
    "act,nonneg,cont,mono,lb",
    [
        (Identity(), False, True, True, -math.inf),
        (ReLU(), True, True, True, 0.0),
        (LReLU(0.5), False, True, True, -math.inf),
        (LReLU(-0.5), True, True, False, 0.0),
        (Tanh(), False, True, True, -1.0),
        (Thresh(1.0, 0.0), True, False, True, 0.0),
        (Thresh(1.0, 1.0), True, True, True, 1.0),
        (Thresh(1.0, 3.0), True, False, False, 1.0),
        (Thresh(-1.0, 0.0), False, False, False, -1.0),
        (Shifted(Tanh(), 1.0), True, True, True, 0.0),
        (Shifted(Tanh(), 0.25), True, True, True, 0.0),
        (Shifted(ReLU(), 2.0), True, True, True, 2.0),
    ],
    ids=repr,
)
def test_activation_metadata(act, nonneg, cont, mono, lb):
    assert act.nonnegative is nonneg
    assert act.continuous is cont
    assert act.wivp is cont
    assert act.monotone is mono
    assert activation_lower_bound(act) == lb


@pytest.mark.parametrize("act", ACTS, ids=repr)
def test_lower_bound_holds_on_grid(act):
    xs = np.linspace(-100, 100, 20001)
    assert np.all(act(xs) >= act.lower_bound())


@settings(max_examples=60, deadline=None)
@given(a=finite, b=finite)
def test_image_covers_samples_and_is_attained(a, b):
    lo, hi = min(a, b), max(a, b)
    xs = np.linspace(lo, hi, 501)
    for act in ACTS:
        parts = act.image(lo, hi)
        ys = act(xs)
        inside = np.zeros_like(ys, dtype=bool)
        for p, q in parts:
            inside |= (ys >= p - 1e-12) & (ys <= q + 1e-12)
        assert inside.all(), act
        # the hull endpoints are attained (up to the grid) by continuous pieces
        h_lo, h_hi = act.image_hull(lo, hi)
        assert h_lo <= ys.min() + 1e-12 and h_hi >= ys.max() - 1e-12


def test_thresh_image_has_a_gap():
    assert Thresh(1.0, 0.0).image(0.0, 2.0) == [(0.0, 0.0), (1.0, 2.0)]
    assert Thresh(1.0, 1.0).image(0.0, 2.0) == [(1.0, 2.0)]


def test_shift_must_be_nonnegative():
    with pytest.raises(ValidationError):
        Shifted(ReLU(), -1.0)
    with pytest.raises(ValidationError):
        Shifted(ReLU(), math.inf)


def test_running_example_outputs():
    w1, w2 = [[1.0], [-1.0]], [[1, 1], [1, 0], [0, 1]]
    relu = Dnn.from_layers([(w1, ReLU()), (w2, Identity())])
    lrelu = Dnn.from_layers([(w1, LReLU(0.5)), (w2, Identity())])
    assert eval_dnn(relu, [1.0]).tolist() == [1.0, 1.0, 0.0]
    assert eval_dnn(lrelu, [1.0]).tolist() == [0.5, 1.0, -0.5]
    assert relu.sizes == [1, 2, 3]


def test_trace_records_pre_and_post():
    n = Dnn.from_layers([([[1.0], [-1.0]], ReLU()), ([[1, 1]], Identity())])
    tr = n.trace([2.0])
    assert [p.tolist() for p in tr.pre] == [[2.0, -2.0], [2.0]]
    assert [p.tolist() for p in tr.post] == [[2.0], [2.0, 0.0], [2.0]]
    assert tr.output.tolist() == [2.0]


def test_network_validation():
    with pytest.raises(DimensionMismatch):
        Dnn.from_layers([([[1.0, 2.0]], ReLU()), ([[1.0, 2.0]], Identity())])
    with pytest.raises(ValidationError):
        DnnLayer([[np.nan]], ReLU())
    with pytest.raises(ShapeMismatch):
        DnnLayer(np.zeros((0, 2)), ReLU())
    n = Dnn.from_layers([([[1.0, 2.0]], ReLU())])
    with pytest.raises(DimensionMismatch):
        n([1.0])


def test_weights_are_read_only_copies():
    w = np.array([[1.0, 2.0]])
    layer = DnnLayer(w, ReLU())
    w[0, 0] = 5.0
    assert layer.weights[0, 0] == 1.0
    with pytest.raises(ValueError):
        layer.weights[0, 0] = 3.0


def test_box():
    b = Box([0.0, -1.0], [1.0, 1.0])
    assert b.contains([0.5, 0.0]) and not b.contains([2.0, 0.0])
    assert b.contains([1.0 + 1e-10, 0.0], eps=1e-9)
    assert Box.point([1.0, 2.0]) == Box([1.0, 2.0], [1.0, 2.0])
    assert not Box([-math.inf], [0.0]).bounded
    with pytest.raises(ValidationError):
        Box([1.0], [0.0])
    with pytest.raises(DimensionMismatch):
        b.contains([1.0])
