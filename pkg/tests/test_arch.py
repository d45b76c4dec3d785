"""Shape propagation and validation tests.

The key oracle here is a literal sliding-window position counter: walk the
padded input with the dilated kernel and count how many placements fit. The
closed-form output-size rule must agree with it everywhere.
"""

import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netrescale import (
    ConvLayer,
    DenseLayer,
    FlattenLayer,
    GlobalAvgPoolLayer,
    InvalidGeometry,
    NetworkSpec,
    PoolLayer,
    TensorShape,
    conv_output_size,
    lenet_net,
    propagate_shapes,
    validate,
)


def sliding_window_positions(n: int, kernel: int, stride: int, padding: int, dilation: int) -> int:
    """Count kernel placements by literally stepping across the padded input."""
    padded = n + 2 * padding
    span = dilation * (kernel - 1) + 1
    count = 0
    start = 0
    while start + span <= padded:
        count += 1
        start += stride
    return count


def test_same_padding_identity():
    net = NetworkSpec(TensorShape(32, 3), (ConvLayer(8, 3, stride=1, padding=1),))
    assert propagate_shapes(net) == [TensorShape(32, 8)]


def test_dilated_strided_example():
    # floor((56 - 2*4 - 1 + 0)/2 + 1) = 24
    assert conv_output_size(56, 5, 2, 0, 2) == 24
    net = NetworkSpec(TensorShape(56, 1), (ConvLayer(4, 5, stride=2, padding=0, dilation=2),))
    assert propagate_shapes(net)[0].spatial == 24


def test_kernel_larger_than_input_raises():
    net = NetworkSpec(TensorShape(4, 1), (ConvLayer(1, 5),))
    with pytest.raises(InvalidGeometry):
        propagate_shapes(net)


def test_no_dilation_no_padding_reduces_to_simple_floor():
    for n in range(1, 65):
        for c in range(1, 9):
            for s in range(1, 6):
                if n >= c:
                    assert conv_output_size(n, c, s, 0, 1) == (n - c) // s + 1


@settings(max_examples=300, deadline=None)
@given(
    n=st.integers(1, 64),
    c=st.integers(1, 8),
    s=st.integers(1, 5),
    p=st.integers(0, 5),
    d=st.integers(1, 4),
)
def test_output_size_matches_position_counter(n, c, s, p, d):
    count = sliding_window_positions(n, c, s, p, d)
    formula = conv_output_size(n, c, s, p, d)
    if count == 0:
        assert formula < 1
    else:
        assert formula == count


def test_pooling_uses_dilation_one():
    # A pool layer has no dilation field; its shape rule is the dilation-1 case.
    net = NetworkSpec(TensorShape(24, 10), (PoolLayer("max", 2, stride=2),))
    assert propagate_shapes(net) == [TensorShape(12, 10)]


@given(spatial=st.integers(1, 64), channels=st.integers(1, 32))
def test_global_avg_pool_output_is_1x1(spatial, channels):
    net = NetworkSpec(TensorShape(spatial, channels), (GlobalAvgPoolLayer(),))
    assert propagate_shapes(net) == [TensorShape(1, channels)]


def test_flatten_output_length():
    net = NetworkSpec(TensorShape(4, 10), (FlattenLayer(),))
    assert propagate_shapes(net) == [TensorShape(1, 160)]


def test_propagation_is_deterministic():
    net = lenet_net(28, 1, 10, 5, 2)
    assert propagate_shapes(net) == propagate_shapes(net)


def test_validate_lenet_is_clean():
    assert validate(lenet_net(28, 1, 10, 5, 2)).ok


def test_validate_zero_stride():
    net = NetworkSpec(TensorShape(8, 1), (ConvLayer(4, 3, stride=0),))
    report = validate(net)
    assert any("stride >= 1" in v for v in report.violations)


def test_validate_dense_before_conv():
    net = NetworkSpec(
        TensorShape(8, 1),
        (FlattenLayer(), DenseLayer(10), ConvLayer(4, 3)),
    )
    report = validate(net)
    assert any("conv layer after dense boundary" in v for v in report.violations)


def test_validate_double_boundary():
    net = NetworkSpec(TensorShape(8, 1), (FlattenLayer(), FlattenLayer(), DenseLayer(2)))
    report = validate(net)
    assert any("second flatten" in v for v in report.violations)


def test_validate_reports_geometry_separately():
    net = NetworkSpec(TensorShape(4, 1), (ConvLayer(1, 5),))
    report = validate(net)
    assert not report.violations
    assert report.geometry
    assert not report.ok


def test_identity_pooling_is_allowed():
    net = NetworkSpec(TensorShape(9, 2), (PoolLayer("avg", 1, stride=1),))
    assert validate(net).ok
    assert propagate_shapes(net) == [TensorShape(9, 2)]


def test_layers_are_immutable():
    layer = ConvLayer(4, 3)
    with pytest.raises(dataclasses.FrozenInstanceError):
        layer.kernel = 5
    net = lenet_net(28, 1, 10, 5, 2)
    with pytest.raises(dataclasses.FrozenInstanceError):
        net.name = "other"


def test_network_spec_freezes_layer_list():
    layers = [ConvLayer(4, 3), FlattenLayer(), DenseLayer(2)]
    net = NetworkSpec(TensorShape(8, 1), layers)
    layers.append(DenseLayer(99))
    assert len(net.layers) == 3
    assert isinstance(net.layers, tuple)
