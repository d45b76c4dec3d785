"""The four budget-preserving rescaling procedures.

Each solver takes a network and a higher target resolution and returns every
integer solution, within the configured enumeration ranges, that keeps the
chosen budget (parameter count or FLOPS) exactly equal over the declared
scope:

* approach I   - global average pooling before the fc head; optionally
                 shrink the first fc layer to absorb the extra pooling FLOPS
                 (scope: fc_head).
* approach II  - dilate the first conv so its output map size is unchanged;
                 parameters and FLOPS are both conserved (scope: conv1).
* approach III - grow the first conv kernel, shrink its filter count, and
                 insert an average-pooling layer that restores the map size
                 (scope: conv1+pool).
* approach IV  - grow the first conv kernel and re-balance the first two
                 conv layers jointly, keeping the second layer's filter
                 count fixed (scope: first_two_convs).

All equalities are exact integer equalities; there is no tolerance in this
module (budget slack belongs to the sweep layer). Enumeration is plain
nested-interval search with algebraic pruning where a variable is uniquely
determined (e.g. the new filter count is solved for and kept only when it
divides out to an integer). Ranges are tiny, so exhaustiveness is the
correctness guarantee.

Solution lists are deterministic: sorted lexicographically by the solution
tuple printed in each candidate.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from . import cost
from .arch import (
    ConvLayer,
    DenseLayer,
    GlobalAvgPoolLayer,
    NetworkSpec,
    PoolLayer,
    at_resolution,
    boundary_index,
    conv_output_size,
    insert_layer,
    propagate_shapes,
    replace_layer,
)

PARAMS = "params"
FLOPS = "flops"
BUDGET_MODES = (PARAMS, FLOPS)

SCOPE_FC_HEAD = "fc_head"
SCOPE_CONV1 = "conv1"
SCOPE_CONV1_POOL = "conv1+pool"
SCOPE_FIRST_TWO_CONVS = "first_two_convs"


class StructureMismatch(Exception):
    """The network does not have the layer structure an approach requires."""


@dataclass(frozen=True)
class EnumRanges:
    """Inclusive integer intervals the solvers enumerate over.

    Defaults follow the experimental protocol: kernel 3..8, stride 1..5,
    dilation 2..4. The padding interval additionally admits 0 (default 0..5)
    because unpadded convolutions are common in the original networks.
    """

    kernel: tuple[int, int] = (3, 8)
    stride: tuple[int, int] = (1, 5)
    padding: tuple[int, int] = (0, 5)
    dilation: tuple[int, int] = (2, 4)

    def __post_init__(self) -> None:
        for name, (lo, hi), minimum in (
            ("kernel", self.kernel, 1),
            ("stride", self.stride, 1),
            ("padding", self.padding, 0),
            ("dilation", self.dilation, 1),
        ):
            if lo < minimum:
                raise ValueError(f"{name} interval lower bound {lo} < {minimum}")
            if hi < lo:
                raise ValueError(f"{name} interval {lo}..{hi} is empty")

    def kernels(self) -> range:
        return range(self.kernel[0], self.kernel[1] + 1)

    def strides(self) -> range:
        return range(self.stride[0], self.stride[1] + 1)

    def paddings(self) -> range:
        return range(self.padding[0], self.padding[1] + 1)

    def dilations(self) -> range:
        return range(self.dilation[0], self.dilation[1] + 1)


@dataclass(frozen=True)
class SolutionCandidate:
    """One budget-preserving modification of a network.

    solution_tuple lists the solved variables in the approach's canonical
    order; param_delta/flops_delta are whole-network differences of the
    modified net at the new resolution against the original at its own
    resolution (for approach I: against the original with its boundary
    converted to global average pooling).
    """

    approach: str  # "I" | "II" | "III" | "IV"
    budget_mode: str  # "params" | "flops"
    new_resolution: int
    modified_net: NetworkSpec
    scope: str
    solution_tuple: tuple[int, ...]
    param_delta: int
    flops_delta: int


def _deltas(baseline: NetworkSpec, modified: NetworkSpec) -> tuple[int, int]:
    base = cost.cost_report(baseline)
    mod = cost.cost_report(modified)
    return mod.total_params - base.total_params, mod.total_flops - base.total_flops


def _check_mode(budget_mode: str) -> None:
    if budget_mode not in BUDGET_MODES:
        raise ValueError(f"budget_mode must be one of {BUDGET_MODES}, got {budget_mode!r}")


def _first_conv(net: NetworkSpec) -> ConvLayer:
    if not net.layers or not isinstance(net.layers[0], ConvLayer):
        raise StructureMismatch("first layer must be a conv layer")
    return net.layers[0]


def gap_head(net: NetworkSpec) -> NetworkSpec:
    """The net with its flatten boundary replaced by global average pooling.

    This is the approach-I comparison baseline: original and solution share
    the same fc-head structure, so parameter counts are comparable. Requires
    a boundary followed by at least two dense layers.
    """
    b = boundary_index(net)
    if b is None:
        raise StructureMismatch("no flatten/global-avg-pool boundary before the fc head")
    tail = net.layers[b + 1 :]
    if len(tail) < 2 or not all(isinstance(l, DenseLayer) for l in tail[:2]):
        raise StructureMismatch("approach I needs at least two dense layers after the boundary")
    if isinstance(net.layers[b], GlobalAvgPoolLayer):
        return net
    return replace_layer(net, b, GlobalAvgPoolLayer())


def solve_approach1(net: NetworkSpec, new_resolution: int, budget_mode: str) -> list[SolutionCandidate]:
    """Average pooling before the fc head.

    params mode: the boundary swap alone keeps parameters fixed, so there is
    exactly one candidate. flops mode: the first fc layer is resized to the
    unique integer that absorbs the extra pooling FLOPS over the
    pool+fc1+fc2 scope; empty when no such integer >= 1 exists.
    """
    _check_mode(budget_mode)
    if new_resolution <= net.input.spatial:
        raise ValueError(f"new resolution {new_resolution} must exceed {net.input.spatial}")

    base = gap_head(net)
    b = boundary_index(base)
    fc1_index = b + 1
    fc1: DenseLayer = base.layers[fc1_index]
    fc2: DenseLayer = base.layers[fc1_index + 1]

    shape_in = net.input if b == 0 else propagate_shapes(base)[b - 1]
    u1, v1 = shape_in.spatial, shape_in.channels
    hi = at_resolution(base, new_resolution)
    u1p = new_resolution if b == 0 else propagate_shapes(hi)[b - 1].spatial

    z1, z2 = fc1.out_features, fc2.out_features
    b1 = 1 if fc1.has_bias else 0
    b2 = 1 if fc2.has_bias else 0

    if budget_mode == PARAMS:
        # The GAP boundary makes the fc head resolution independent.
        dp, df = _deltas(base, hi)
        return [
            SolutionCandidate("I", PARAMS, new_resolution, hi, SCOPE_FC_HEAD, (z1,), dp, df)
        ]

    # pool + fc1 + fc2 FLOPS at the base resolution:
    target = u1 * u1 * v1 + (v1 * z1 + b1 * z1) + (z1 * z2 + b2 * z2)
    # At the new resolution the same scope costs u1p^2*v1 + z1p*(v1+b1+z2) + b2*z2.
    numerator = target - u1p * u1p * v1 - b2 * z2
    per_unit = v1 + b1 + z2
    if numerator <= 0 or numerator % per_unit != 0:
        return []
    z1p = numerator // per_unit
    if z1p < 1:
        return []
    candidate = replace_layer(hi, fc1_index, dataclasses.replace(fc1, out_features=z1p))
    dp, df = _deltas(base, candidate)
    return [
        SolutionCandidate("I", FLOPS, new_resolution, candidate, SCOPE_FC_HEAD, (z1p,), dp, df)
    ]


def solve_approach2(
    net: NetworkSpec,
    new_resolution: int,
    ranges: EnumRanges,
    budget_mode: str = PARAMS,
) -> list[SolutionCandidate]:
    """Dilated first convolution.

    Enumerates (padding, stride, dilation) triples whose output map side at
    the new resolution equals the original conv1 output side. Kernel and
    filter count are untouched, so whole-network parameters AND FLOPS are
    conserved; the solution set is the same for either budget mode (the
    mode is only recorded on the candidates).
    """
    _check_mode(budget_mode)
    conv1 = _first_conv(net)
    if conv1.dilation != 1:
        raise StructureMismatch("approach II expects an undilated original conv1")

    n = net.input.spatial
    m1 = conv_output_size(n, conv1.kernel, conv1.stride, conv1.padding, 1)

    out: list[SolutionCandidate] = []
    for p in ranges.paddings():
        for s in ranges.strides():
            for d in ranges.dilations():
                if conv_output_size(new_resolution, conv1.kernel, s, p, d) != m1:
                    continue
                modified = at_resolution(
                    replace_layer(net, 0, dataclasses.replace(conv1, stride=s, padding=p, dilation=d)),
                    new_resolution,
                )
                dp, df = _deltas(net, modified)
                out.append(
                    SolutionCandidate(
                        "II", budget_mode, new_resolution, modified, SCOPE_CONV1, (p, s, d), dp, df
                    )
                )
    out.sort(key=lambda c: c.solution_tuple)
    return out


def solve_approach3(
    net: NetworkSpec,
    new_resolution: int,
    ranges: EnumRanges,
    budget_mode: str,
) -> list[SolutionCandidate]:
    """Bigger conv1 kernel, fewer conv1 filters, new average pooling after it.

    The new filter count is forced by the budget equality over the
    conv1(+new pool) scope: in params mode K1'*C1'^2*D = K1*C1^2*D, so the
    filter count drops quadratically as the kernel grows; in flops mode the
    inserted pooling layer's cost (one op per element of the conv1 output)
    is part of the equality. Pool geometry must restore the original conv1
    output side. Solution tuples are (K1', C1', P1', S1', Cp, Pp, Sp).

    Downstream layers see the same spatial size but K1' channels instead of
    K1; the resulting whole-network drift is reported in the deltas, not
    hidden.
    """
    _check_mode(budget_mode)
    conv1 = _first_conv(net)
    d_in = net.input.channels
    n = net.input.spatial
    m1 = conv_output_size(n, conv1.kernel, conv1.stride, conv1.padding, conv1.dilation)
    b1 = 1 if conv1.has_bias else 0

    target_params = cost.conv_params(conv1, d_in)
    target_flops = cost.conv_flops(m1, conv1, d_in)

    out: list[SolutionCandidate] = []
    for c1p in ranges.kernels():
        if c1p <= conv1.kernel:
            continue
        for p1 in ranges.paddings():
            for s1 in ranges.strides():
                m1p = conv_output_size(new_resolution, c1p, s1, p1, 1)
                if m1p < 1:
                    continue
                if budget_mode == PARAMS:
                    per_unit = c1p * c1p * d_in + b1
                    numerator = target_params
                else:
                    # conv1' FLOPS per filter plus the new pool's per-channel cost
                    per_unit = m1p * m1p * (c1p * c1p * d_in + b1) + m1p * m1p
                    numerator = target_flops
                if numerator % per_unit != 0:
                    continue
                k1p = numerator // per_unit
                if k1p < 1:
                    continue
                new_conv = ConvLayer(k1p, c1p, s1, p1, 1, conv1.has_bias)
                for cp in ranges.kernels():
                    for pp in ranges.paddings():
                        for sp in ranges.strides():
                            if conv_output_size(m1p, cp, sp, pp, 1) != m1:
                                continue
                            modified = at_resolution(
                                insert_layer(
                                    replace_layer(net, 0, new_conv),
                                    1,
                                    PoolLayer("avg", cp, sp, pp),
                                ),
                                new_resolution,
                            )
                            dp, df = _deltas(net, modified)
                            out.append(
                                SolutionCandidate(
                                    "III",
                                    budget_mode,
                                    new_resolution,
                                    modified,
                                    SCOPE_CONV1_POOL,
                                    (k1p, c1p, p1, s1, cp, pp, sp),
                                    dp,
                                    df,
                                )
                            )
    out.sort(key=lambda c: c.solution_tuple)
    return out


def _first_two_convs(net: NetworkSpec) -> tuple[int, int]:
    """Indices of the first two conv layers; anything other than pooling
    before or between them is a structure mismatch."""
    indices = []
    for i, layer in enumerate(net.layers):
        if isinstance(layer, ConvLayer):
            indices.append(i)
            if len(indices) == 2:
                return indices[0], indices[1]
        elif isinstance(layer, PoolLayer):
            continue
        else:
            break
    raise StructureMismatch("approach IV needs two conv layers separated only by pooling")


def solve_approach4(
    net: NetworkSpec,
    new_resolution: int,
    ranges: EnumRanges,
    budget_mode: str,
) -> list[SolutionCandidate]:
    """Joint adjustment of the first two conv layers, no added layer.

    The second layer keeps its filter count so the network remainder is
    untouched; conv2's output side must equal the original's. The first
    layer's filter count is forced by the params (or FLOPS) equality over
    the two-layer scope. Solution tuples are (K1', C1', P1', S1', C2', P2',
    S2').
    """
    _check_mode(budget_mode)
    i1, i2 = _first_two_convs(net)
    conv1: ConvLayer = net.layers[i1]
    conv2: ConvLayer = net.layers[i2]
    pools_between = net.layers[i1 + 1 : i2]

    def prefix_spatial(n: int) -> int:
        for j, pool in enumerate(net.layers[:i1]):
            n = conv_output_size(n, pool.kernel, pool.stride, pool.padding, 1)
            if n < 1:
                raise StructureMismatch(f"layer {j}: prefix pooling does not fit input {n}")
        return n

    def between_spatial(m: int) -> int:
        # conv2 input side given a conv1 output side; <1 marks infeasible.
        for pool in pools_between:
            m = conv_output_size(m, pool.kernel, pool.stride, pool.padding, 1)
            if m < 1:
                return m
        return m

    d_in = net.input.channels
    n1 = prefix_spatial(net.input.spatial)
    m1 = conv_output_size(n1, conv1.kernel, conv1.stride, conv1.padding, conv1.dilation)
    i2_in = between_spatial(m1)
    m2 = conv_output_size(i2_in, conv2.kernel, conv2.stride, conv2.padding, conv2.dilation)

    k1, k2 = conv1.out_channels, conv2.out_channels
    b1 = 1 if conv1.has_bias else 0
    b2 = 1 if conv2.has_bias else 0
    target_params = cost.conv_params(conv1, d_in) + cost.conv_params(conv2, k1)
    target_flops = cost.conv_flops(m1, conv1, d_in) + cost.conv_flops(m2, conv2, k1)

    n1p = prefix_spatial(new_resolution)
    out: list[SolutionCandidate] = []
    for c1p in ranges.kernels():
        if c1p <= conv1.kernel:
            continue
        for p1 in ranges.paddings():
            for s1 in ranges.strides():
                m1p = conv_output_size(n1p, c1p, s1, p1, 1)
                if m1p < 1:
                    continue
                i2_in_p = between_spatial(m1p)
                if i2_in_p < 1:
                    continue
                for c2p in ranges.kernels():
                    if budget_mode == PARAMS:
                        per_unit = c1p * c1p * d_in + b1 + k2 * c2p * c2p
                        numerator = target_params - b2 * k2
                    else:
                        per_unit = m1p * m1p * (c1p * c1p * d_in + b1) + m2 * m2 * c2p * c2p * k2
                        numerator = target_flops - b2 * m2 * m2 * k2
                    if numerator % per_unit != 0:
                        continue
                    k1p = numerator // per_unit
                    if k1p < 1:
                        continue
                    for p2 in ranges.paddings():
                        for s2 in ranges.strides():
                            if conv_output_size(i2_in_p, c2p, s2, p2, 1) != m2:
                                continue
                            modified = replace_layer(
                                replace_layer(
                                    net, i1, ConvLayer(k1p, c1p, s1, p1, 1, conv1.has_bias)
                                ),
                                i2,
                                ConvLayer(k2, c2p, s2, p2, 1, conv2.has_bias),
                            )
                            modified = at_resolution(modified, new_resolution)
                            dp, df = _deltas(net, modified)
                            out.append(
                                SolutionCandidate(
                                    "IV",
                                    budget_mode,
                                    new_resolution,
                                    modified,
                                    SCOPE_FIRST_TWO_CONVS,
                                    (k1p, c1p, p1, s1, c2p, p2, s2),
                                    dp,
                                    df,
                                )
                            )
    out.sort(key=lambda c: c.solution_tuple)
    return out


APPROACHES = ("I", "II", "III", "IV")


def solve(
    net: NetworkSpec,
    approach: str,
    new_resolution: int,
    ranges: EnumRanges,
    budget_mode: str,
) -> list[SolutionCandidate]:
    """Dispatch to one of the four approaches by Roman numeral."""
    if approach == "I":
        return solve_approach1(net, new_resolution, budget_mode)
    if approach == "II":
        return solve_approach2(net, new_resolution, ranges, budget_mode)
    if approach == "III":
        return solve_approach3(net, new_resolution, ranges, budget_mode)
    if approach == "IV":
        return solve_approach4(net, new_resolution, ranges, budget_mode)
    raise ValueError(f"unknown approach {approach!r}")
