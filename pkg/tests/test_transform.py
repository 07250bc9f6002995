import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annkit import Box, Dnn, Identity, LReLU, ReLU, Shifted, Tanh, Thresh
from annkit.errors import CarryUnsolvable, DimensionMismatch, InvalidBound, UnboundedActivation
from annkit.paper_examples import two_layer_net
from annkit.transform import augment_input, lower_bound_activations, shift_dnn, solve_carry


def random_net(rng, act, sizes):
    layers = []
    for i in range(1, len(sizes)):
        a = Identity() if i == len(sizes) - 1 else act
        layers.append((rng.uniform(-2, 2, size=(sizes[i], sizes[i - 1])), a))
    return Dnn.from_layers(layers)


def test_lower_bounds():
    assert lower_bound_activations(two_layer_net(ReLU())) == 0.0
    assert lower_bound_activations(two_layer_net(Tanh())) == -1.0
    assert lower_bound_activations(two_layer_net(LReLU(0.5)), Box([-1.0], [1.0])) == -0.5
    assert lower_bound_activations(two_layer_net(LReLU(0.5)), Box([-2.0], [0.5])) == -1.0
    with pytest.raises(UnboundedActivation):
        lower_bound_activations(two_layer_net(LReLU(0.5)))
    with pytest.raises(UnboundedActivation):
        lower_bound_activations(two_layer_net(LReLU(0.5)), Box([-math.inf], [0.0]))
    with pytest.raises(DimensionMismatch):
        lower_bound_activations(two_layer_net(ReLU()), Box([0.0, 0.0], [1.0, 1.0]))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_lower_bound_is_sound_on_samples(seed):
    rng = np.random.default_rng(seed)
    net = random_net(rng, LReLU(0.2), [2, 3, 4, 2])
    region = Box([-1.0, -2.0], [1.5, 0.5])
    c = lower_bound_activations(net, region)
    for x in rng.uniform(region.lo, region.hi, size=(100, 2)):
        tr = net.trace(x)
        for post in tr.post[1:-1]:
            assert post.min() >= c - 1e-12


def test_shift_example_weights():
    net = two_layer_net(LReLU(0.5))
    shifted, report = shift_dnn(net, -0.5, Box([-1.0], [1.0]))
    assert shifted.layers[0].weights.tolist() == [[1.0, 0.0], [-1.0, 0.0], [0.0, 0.5]]
    assert shifted.layers[1].weights.tolist() == [[1.0, 1.0, -1.0], [1.0, 0.0, -0.5], [0.0, 1.0, -0.5]]
    assert shifted.layers[0].activation == Shifted(LReLU(0.5), 0.5)
    assert shifted.layers[1].activation == Identity()
    assert shifted(augment_input([-1.0])).tolist() == [0.5, -0.5, 1.0]
    assert report.original_sizes == (1, 2, 3) and report.new_sizes == (2, 3, 3)
    assert report.carry_weights == (0.5,) and report.carry_index == (1, 2, None)
    doc = report.to_json()
    assert doc["bound"] == -0.5 and doc["region"] == {"lo": [-1.0], "hi": [1.0]}


def test_relu_shift_by_zero_keeps_outputs():
    rng = np.random.default_rng(1)
    net = random_net(rng, ReLU(), [3, 5, 4, 2])
    c = lower_bound_activations(net)
    assert c == 0.0
    shifted, report = shift_dnn(net, c)
    assert report.region is None and report.to_json()["region"] is None
    xs = rng.uniform(-3, 3, size=(1000, 3))
    for x in xs:
        np.testing.assert_allclose(shifted(augment_input(x)), net(x), rtol=0, atol=1e-12)


def test_tanh_shift_makes_activations_nonnegative():
    rng = np.random.default_rng(2)
    net = random_net(rng, Tanh(), [2, 4, 1, 3])  # single-node hidden layer keeps the carry solvable
    shifted, report = shift_dnn(net, lower_bound_activations(net))
    assert report.bound == -1.0
    for x in rng.uniform(-3, 3, size=(1000, 2)):
        tr = shifted.trace(augment_input(x))
        assert all(p.min() >= 0.0 for p in tr.post[1:-1])
        np.testing.assert_allclose(tr.output, net(x), rtol=0, atol=1e-9)
    assert all(b - a <= 1 for a, b in zip(report.original_sizes, report.new_sizes))


def test_shift_errors():
    net = two_layer_net(ReLU())
    for bad in (0.5, math.nan, -math.inf):
        with pytest.raises(InvalidBound):
            shift_dnn(net, bad)
    with pytest.raises(DimensionMismatch):
        shift_dnn(net, 0.0, Box([0.0, 0.0], [1.0, 1.0]))


def test_solve_carry():
    assert solve_carry(Shifted(LReLU(0.5), 0.5)) == 0.5
    assert solve_carry(Shifted(ReLU(), 0.0)) == 1.0
    k = solve_carry(Shifted(Tanh(), 1.0))
    assert abs(math.tanh(k) + 1.0 - 1.0) < 1e-12
    assert Shifted(Thresh(1.0, 0.0), 0.0).scalar(solve_carry(Shifted(Thresh(1.0, 0.0), 0.0))) == 1.0
    with pytest.raises(CarryUnsolvable):
        solve_carry(Shifted(Thresh(2.0, 0.0), 0.0))  # jumps from 0 straight to 2
    with pytest.raises(CarryUnsolvable):
        solve_carry(Shifted(ReLU(), 2.0))
    with pytest.raises(CarryUnsolvable):
        solve_carry(Shifted(Tanh(), 2.5))
