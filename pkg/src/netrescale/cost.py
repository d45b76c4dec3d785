"""Exact integer accounting of parameters and FLOPS per layer and network.

Counting conventions (single inference pass, backward pass excluded):

* conv: params = K*C^2*D_in (+K with bias); FLOPS = M^2*C^2*D_in*K, or
  M^2*(C^2*D_in + 1)*K with bias, for output map side M.
* dense: params = FLOPS = I*O (+O with bias).
* max/avg/global pooling: no parameters; FLOPS = one operation per element
  of the layer's INPUT tensor.
* flatten: free.

Everything is plain Python integers, so sums and equality comparisons are
exact at any magnitude; there is no overflow and no float rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

from .arch import (
    ConvLayer,
    DenseLayer,
    FlattenLayer,
    GlobalAvgPoolLayer,
    NetworkSpec,
    PoolLayer,
    TensorShape,
    dense_input_features,
    propagate_shapes,
)


@dataclass(frozen=True)
class LayerCost:
    params: int
    flops: int
    out_shape: TensorShape


@dataclass(frozen=True)
class CostReport:
    per_layer: tuple[LayerCost, ...]
    total_params: int
    total_flops: int


def conv_params(layer: ConvLayer, in_channels: int) -> int:
    """K*C^2*D_in weights, plus K bias terms when the layer has a bias."""
    p = layer.out_channels * layer.kernel * layer.kernel * in_channels
    if layer.has_bias:
        p += layer.out_channels
    return p


def dense_params(in_features: int, out_features: int, bias: bool) -> int:
    p = in_features * out_features
    if bias:
        p += out_features
    return p


def conv_flops(out_spatial: int, layer: ConvLayer, in_channels: int) -> int:
    """Sliding-window cost over the whole output map.

    M^2*(C^2*K_in + 1)*K_out with bias, M^2*C^2*K_in*K_out without. Stride,
    padding and dilation enter only through out_spatial.
    """
    taps = layer.kernel * layer.kernel * in_channels
    if layer.has_bias:
        taps += 1
    return out_spatial * out_spatial * taps * layer.out_channels


def pool_flops(in_shape: TensorShape) -> int:
    """One operation per input element; applies to max, avg, and global
    average pooling alike."""
    return in_shape.spatial * in_shape.spatial * in_shape.channels


def dense_flops(in_features: int, out_features: int, bias: bool) -> int:
    """Same count as dense_params: I*O, plus O bias additions."""
    return dense_params(in_features, out_features, bias)


def cost_report(net: NetworkSpec) -> CostReport:
    """Per-layer and total costs, chained through shape propagation.

    Raises InvalidGeometry (from propagation) on nets whose windows do not
    fit.
    """
    shapes = propagate_shapes(net)
    per_layer = []
    in_shape = net.input
    for layer, out_shape in zip(net.layers, shapes):
        if isinstance(layer, ConvLayer):
            cost = LayerCost(
                conv_params(layer, in_shape.channels),
                conv_flops(out_shape.spatial, layer, in_shape.channels),
                out_shape,
            )
        elif isinstance(layer, (PoolLayer, GlobalAvgPoolLayer)):
            cost = LayerCost(0, pool_flops(in_shape), out_shape)
        elif isinstance(layer, FlattenLayer):
            cost = LayerCost(0, 0, out_shape)
        elif isinstance(layer, DenseLayer):
            i = dense_input_features(in_shape)
            cost = LayerCost(
                dense_params(i, layer.out_features, layer.has_bias),
                dense_flops(i, layer.out_features, layer.has_bias),
                out_shape,
            )
        else:
            raise TypeError(f"unknown layer type {type(layer).__name__}")
        per_layer.append(cost)
        in_shape = out_shape

    total_params = sum(c.params for c in per_layer)
    total_flops = sum(c.flops for c in per_layer)
    report = CostReport(tuple(per_layer), total_params, total_flops)
    # Internal consistency: totals must equal the sum of the parts.
    assert report.total_params == sum(c.params for c in report.per_layer)
    assert report.total_flops == sum(c.flops for c in report.per_layer)
    return report
