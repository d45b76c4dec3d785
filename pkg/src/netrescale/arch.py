"""Declarative CNN architecture description with exact shape propagation.

A network is an ordered list of layers over square activation tensors.
Spatial bookkeeping uses the usual floor formula for strided, padded,
dilated sliding windows, so every downstream count (parameters, FLOPS,
solver constraints) is exact integer arithmetic.

All types are frozen dataclasses: immutable after construction, safe to
share across threads, and usable as dict keys.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional, Union


class InvalidGeometry(Exception):
    """A layer's window does not fit its (padded) input tensor."""


@dataclass(frozen=True)
class TensorShape:
    """Square activation tensor: side length in pixels and channel count."""

    spatial: int
    channels: int


@dataclass(frozen=True)
class ConvLayer:
    """Square convolution. Parameter/FLOPS costs assume sliding-window
    implementation with free nonlinearity."""

    out_channels: int
    kernel: int
    stride: int = 1
    padding: int = 0
    dilation: int = 1
    has_bias: bool = False


@dataclass(frozen=True)
class PoolLayer:
    """Max or average pooling. Never dilated; has no learnable parameters.
    kernel = 1 with stride 1 is identity pooling and is allowed."""

    kind: str  # "max" or "avg"
    kernel: int
    stride: int = 1
    padding: int = 0


@dataclass(frozen=True)
class GlobalAvgPoolLayer:
    """Collapses each channel map to its mean: output is 1 x 1 x channels
    regardless of input spatial size."""


@dataclass(frozen=True)
class FlattenLayer:
    """Reshapes spatial x spatial x channels into a vector of that length.
    Pure reindexing: no parameters, no FLOPS."""


@dataclass(frozen=True)
class DenseLayer:
    """Fully connected layer; input size is derived from the incoming shape."""

    out_features: int
    has_bias: bool = False


Layer = Union[ConvLayer, PoolLayer, GlobalAvgPoolLayer, FlattenLayer, DenseLayer]

_BOUNDARY_TYPES = (GlobalAvgPoolLayer, FlattenLayer)


@dataclass(frozen=True)
class NetworkSpec:
    """An architecture under analysis: input shape plus ordered layers."""

    input: TensorShape
    layers: tuple[Layer, ...]
    name: str = ""

    def __post_init__(self) -> None:
        # Accept any iterable of layers but always store a tuple.
        object.__setattr__(self, "layers", tuple(self.layers))


def conv_output_size(n: int, kernel: int, stride: int, padding: int, dilation: int = 1) -> int:
    """Output side of a square sliding window over an n x n input.

    floor((n - dilation*(kernel-1) - 1 + 2*padding) / stride) + 1; the result
    may be <= 0 when the (dilated) window does not fit the padded input.
    Pooling uses the same rule with dilation = 1.
    """
    return (n - dilation * (kernel - 1) - 1 + 2 * padding) // stride + 1


def _shape_after(layer: Layer, shape: TensorShape, index: int) -> TensorShape:
    if isinstance(layer, ConvLayer):
        m = conv_output_size(shape.spatial, layer.kernel, layer.stride, layer.padding, layer.dilation)
        if m < 1:
            raise InvalidGeometry(
                f"layer {index}: conv kernel {layer.kernel} (dilation {layer.dilation}) "
                f"does not fit {shape.spatial}x{shape.spatial} input with padding {layer.padding}"
            )
        return TensorShape(m, layer.out_channels)
    if isinstance(layer, PoolLayer):
        m = conv_output_size(shape.spatial, layer.kernel, layer.stride, layer.padding, 1)
        if m < 1:
            raise InvalidGeometry(
                f"layer {index}: pool kernel {layer.kernel} does not fit "
                f"{shape.spatial}x{shape.spatial} input with padding {layer.padding}"
            )
        return TensorShape(m, shape.channels)
    if isinstance(layer, GlobalAvgPoolLayer):
        return TensorShape(1, shape.channels)
    if isinstance(layer, FlattenLayer):
        return TensorShape(1, shape.spatial * shape.spatial * shape.channels)
    if isinstance(layer, DenseLayer):
        return TensorShape(1, layer.out_features)
    raise TypeError(f"unknown layer type {type(layer).__name__}")


def propagate_shapes(net: NetworkSpec) -> list[TensorShape]:
    """Shape after each layer, in order. Deterministic and total on valid nets.

    Raises InvalidGeometry when any intermediate spatial size would drop
    below 1.
    """
    shapes = []
    shape = net.input
    for i, layer in enumerate(net.layers):
        shape = _shape_after(layer, shape, i)
        shapes.append(shape)
    return shapes


def dense_input_features(shape: TensorShape) -> int:
    """Vector length a dense layer sees for an incoming tensor."""
    return shape.spatial * shape.spatial * shape.channels


@dataclass(frozen=True)
class ValidationReport:
    """All invariant violations found in a net; empty iff the net is valid.

    Structural/field problems and geometry (shape propagation) problems are
    reported separately because callers treat them differently.
    """

    violations: tuple[str, ...] = ()
    geometry: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations and not self.geometry


def validate(net: NetworkSpec) -> ValidationReport:
    """Check field invariants, layer ordering, and shape propagation."""
    problems: list[str] = []

    if net.input.spatial < 1:
        problems.append(f"input spatial size {net.input.spatial} < 1")
    if net.input.channels < 1:
        problems.append(f"input channels {net.input.channels} < 1")

    seen_boundary = False
    seen_dense = False
    for i, layer in enumerate(net.layers):
        if isinstance(layer, ConvLayer):
            if seen_dense or seen_boundary:
                problems.append(f"layer {i}: conv layer after dense boundary")
            if layer.out_channels < 1:
                problems.append(f"layer {i}: out_channels >= 1 violated ({layer.out_channels})")
            if layer.kernel < 1:
                problems.append(f"layer {i}: kernel >= 1 violated ({layer.kernel})")
            if layer.stride < 1:
                problems.append(f"layer {i}: stride >= 1 violated ({layer.stride})")
            if layer.dilation < 1:
                problems.append(f"layer {i}: dilation >= 1 violated ({layer.dilation})")
            if layer.padding < 0:
                problems.append(f"layer {i}: padding >= 0 violated ({layer.padding})")
        elif isinstance(layer, PoolLayer):
            if seen_dense or seen_boundary:
                problems.append(f"layer {i}: pool layer after dense boundary")
            if layer.kind not in ("max", "avg"):
                problems.append(f"layer {i}: pool kind must be 'max' or 'avg' ({layer.kind!r})")
            if layer.kernel < 1:
                problems.append(f"layer {i}: kernel >= 1 violated ({layer.kernel})")
            if layer.stride < 1:
                problems.append(f"layer {i}: stride >= 1 violated ({layer.stride})")
            if layer.padding < 0:
                problems.append(f"layer {i}: padding >= 0 violated ({layer.padding})")
        elif isinstance(layer, _BOUNDARY_TYPES):
            if seen_boundary:
                problems.append(f"layer {i}: second flatten/global-avg-pool boundary")
            if seen_dense:
                problems.append(f"layer {i}: boundary layer after dense stack")
            seen_boundary = True
        elif isinstance(layer, DenseLayer):
            if layer.out_features < 1:
                problems.append(f"layer {i}: out_features >= 1 violated ({layer.out_features})")
            seen_dense = True
        else:
            problems.append(f"layer {i}: unknown layer type {type(layer).__name__}")

    geometry: list[str] = []
    if not problems:
        try:
            propagate_shapes(net)
        except InvalidGeometry as exc:
            geometry.append(str(exc))

    return ValidationReport(tuple(problems), tuple(geometry))


def at_resolution(net: NetworkSpec, spatial: int) -> NetworkSpec:
    """Same architecture evaluated at a different input resolution."""
    return dataclasses.replace(net, input=dataclasses.replace(net.input, spatial=spatial))


def replace_layer(net: NetworkSpec, index: int, layer: Layer) -> NetworkSpec:
    layers = list(net.layers)
    layers[index] = layer
    return dataclasses.replace(net, layers=tuple(layers))


def insert_layer(net: NetworkSpec, index: int, layer: Layer) -> NetworkSpec:
    layers = list(net.layers)
    layers.insert(index, layer)
    return dataclasses.replace(net, layers=tuple(layers))


def boundary_index(net: NetworkSpec) -> Optional[int]:
    """Index of the flatten/global-avg-pool boundary, or None."""
    for i, layer in enumerate(net.layers):
        if isinstance(layer, _BOUNDARY_TYPES):
            return i
    return None
