"""Independent re-derivation of every claim a solution candidate makes.

This module intentionally duplicates the cost arithmetic as straight-line
expressions instead of importing it: a transcription error in either the
cost model or a solver is then caught by the disagreement. Do not "clean
this up" by delegating to the cost module.

Two entry points:

* verify_candidate: recompute shapes, scope equalities, interface shapes,
  and whole-network deltas for one candidate, flagging every mismatch.
* oracle_enumerate: naive full nested-loop enumeration of an approach's
  solution tuples with no algebraic pruning, for set-equality tests against
  the solvers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .arch import (
    ConvLayer,
    DenseLayer,
    FlattenLayer,
    GlobalAvgPoolLayer,
    InvalidGeometry,
    NetworkSpec,
    PoolLayer,
    TensorShape,
)
from .solvers import EnumRanges, SolutionCandidate, StructureMismatch


def _out(n: int, kernel: int, stride: int, padding: int, dilation: int = 1) -> int:
    # Deliberate duplicate of the sliding-window output rule.
    return (n - dilation * (kernel - 1) - 1 + 2 * padding) // stride + 1


def _walk(net: NetworkSpec) -> list[tuple[int, int, int, int]]:
    """Per-layer (out_spatial, out_channels, params, flops), recomputed here.

    Raises InvalidGeometry when a window does not fit.
    """
    rows = []
    s, c = net.input.spatial, net.input.channels
    for i, layer in enumerate(net.layers):
        if isinstance(layer, ConvLayer):
            m = _out(s, layer.kernel, layer.stride, layer.padding, layer.dilation)
            if m < 1:
                raise InvalidGeometry(f"layer {i}: conv output side {m} < 1")
            k = layer.out_channels
            params = k * layer.kernel * layer.kernel * c + (k if layer.has_bias else 0)
            taps = layer.kernel * layer.kernel * c + (1 if layer.has_bias else 0)
            flops = m * m * taps * k
            s, c = m, k
        elif isinstance(layer, PoolLayer):
            m = _out(s, layer.kernel, layer.stride, layer.padding, 1)
            if m < 1:
                raise InvalidGeometry(f"layer {i}: pool output side {m} < 1")
            params, flops = 0, s * s * c
            s = m
        elif isinstance(layer, GlobalAvgPoolLayer):
            params, flops = 0, s * s * c
            s = 1
        elif isinstance(layer, FlattenLayer):
            params, flops = 0, 0
            s, c = 1, s * s * c
        elif isinstance(layer, DenseLayer):
            i_feat = s * s * c
            params = i_feat * layer.out_features + (layer.out_features if layer.has_bias else 0)
            flops = params
            s, c = 1, layer.out_features
        else:
            raise TypeError(f"unknown layer type {type(layer).__name__}")
        rows.append((s, c, params, flops))
    return rows


def _totals(net: NetworkSpec) -> tuple[int, int]:
    rows = _walk(net)
    return sum(r[2] for r in rows), sum(r[3] for r in rows)


def _gap_head(net: NetworkSpec) -> NetworkSpec:
    """Own copy of the approach-I baseline conversion (flatten -> GAP)."""
    layers = list(net.layers)
    for i, layer in enumerate(layers):
        if isinstance(layer, GlobalAvgPoolLayer):
            return net
        if isinstance(layer, FlattenLayer):
            layers[i] = GlobalAvgPoolLayer()
            return NetworkSpec(net.input, tuple(layers), net.name)
    raise StructureMismatch("no boundary layer to convert for the approach-I baseline")


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of independently re-checking one candidate."""

    scope_equality_holds: bool
    whole_network_param_delta: int
    whole_network_flops_delta: int
    interface_shape_match: bool
    violations: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def _scope_costs(net: NetworkSpec, indices: list[int]) -> tuple[int, int]:
    rows = _walk(net)
    return sum(rows[i][2] for i in indices), sum(rows[i][3] for i in indices)


def _conv_positions(net: NetworkSpec, count: int) -> list[int]:
    out = [i for i, l in enumerate(net.layers) if isinstance(l, ConvLayer)]
    return out[:count]


def verify_candidate(original: NetworkSpec, candidate: SolutionCandidate) -> VerificationReport:
    """Recompute every quantity the candidate claims, from scratch.

    The original is taken at its own resolution (for approach I, after
    converting its boundary to global average pooling); the candidate's
    modified net at the candidate's new resolution. Raises InvalidGeometry
    if either net fails shape propagation.
    """
    violations: list[str] = []
    approach = candidate.approach
    mode = candidate.budget_mode
    modified = candidate.modified_net

    baseline = _gap_head(original) if approach == "I" else original
    base_rows = _walk(baseline)  # raises InvalidGeometry
    mod_rows = _walk(modified)

    if modified.input.spatial != candidate.new_resolution:
        violations.append(
            f"modified net input resolution {modified.input.spatial} differs from the "
            f"declared new resolution {candidate.new_resolution}"
        )

    # Whole-network deltas, recomputed by direct summation over layers.
    dp = sum(r[2] for r in mod_rows) - sum(r[2] for r in base_rows)
    df = sum(r[3] for r in mod_rows) - sum(r[3] for r in base_rows)
    if dp != candidate.param_delta:
        violations.append(
            f"stored whole-network parameter delta {candidate.param_delta} disagrees with "
            f"recomputation {dp}"
        )
    if df != candidate.flops_delta:
        violations.append(
            f"stored whole-network FLOPS delta {candidate.flops_delta} disagrees with "
            f"recomputation {df}"
        )

    scope_ok = True
    interface_ok = True

    def fail_scope(msg: str) -> None:
        nonlocal scope_ok
        scope_ok = False
        violations.append(msg)

    def fail_interface(msg: str) -> None:
        nonlocal interface_ok
        interface_ok = False
        violations.append(msg)

    if approach == "I":
        b_base = next(
            (i for i, l in enumerate(baseline.layers) if isinstance(l, GlobalAvgPoolLayer)), None
        )
        b_mod = next(
            (i for i, l in enumerate(modified.layers) if isinstance(l, GlobalAvgPoolLayer)), None
        )
        if b_base is None or b_mod is None or b_base != b_mod:
            fail_scope("global-average-pooling boundary missing or displaced")
        elif len(modified.layers) != len(baseline.layers):
            fail_scope("approach I must not add or remove layers")
        elif len(baseline.layers) < b_base + 3 or not all(
            isinstance(l, DenseLayer)
            for l in baseline.layers[b_base + 1 : b_base + 3] + modified.layers[b_base + 1 : b_base + 3]
        ):
            fail_scope("approach I needs two dense layers after the boundary")
        else:
            for i, (a, m) in enumerate(zip(baseline.layers, modified.layers)):
                if i == b_base + 1:
                    continue  # the resized first fc layer
                if a != m:
                    fail_scope(f"layer {i} changed; approach I may only resize the first fc layer")
            scope = [b_base, b_base + 1, b_base + 2]
            base_cost = _scope_costs(baseline, scope)
            mod_cost = _scope_costs(modified, scope)
            which = 0 if mode == "params" else 1
            if base_cost[which] != mod_cost[which]:
                fail_scope(
                    f"fc-head {mode} equality violated: original pool+fc1+fc2 cost "
                    f"{base_cost[which]} != modified {mod_cost[which]}"
                )
            # Rejoin point: output of the second dense layer.
            j = b_base + 2
            if base_rows[j][:2] != mod_rows[j][:2]:
                fail_interface(
                    f"fc-head output shape {mod_rows[j][:2]} differs from original {base_rows[j][:2]}"
                )

    elif approach == "II":
        if (
            not baseline.layers
            or not isinstance(baseline.layers[0], ConvLayer)
            or len(modified.layers) != len(baseline.layers)
            or not isinstance(modified.layers[0], ConvLayer)
        ):
            fail_scope("approach II must modify conv1 in place")
        else:
            c_old: ConvLayer = baseline.layers[0]
            c_new: ConvLayer = modified.layers[0]
            if (
                c_new.kernel != c_old.kernel
                or c_new.out_channels != c_old.out_channels
                or c_new.has_bias != c_old.has_bias
            ):
                fail_scope("approach II may only change stride, padding, and dilation of conv1")
            if modified.layers[1:] != baseline.layers[1:]:
                fail_scope("approach II must leave the network remainder untouched")
            if mod_rows[0][:2] != base_rows[0][:2]:
                fail_interface(
                    f"conv1 output shape {mod_rows[0][:2]} differs from original {base_rows[0][:2]}"
                )
            base_cost = _scope_costs(baseline, [0])
            mod_cost = _scope_costs(modified, [0])
            if base_cost != mod_cost:
                fail_scope(
                    f"conv1 params/FLOPS conservation violated: {base_cost} != {mod_cost}"
                )

    elif approach == "III":
        if (
            not baseline.layers
            or not isinstance(baseline.layers[0], ConvLayer)
            or len(modified.layers) != len(baseline.layers) + 1
            or len(modified.layers) < 2
            or not isinstance(modified.layers[0], ConvLayer)
            or not isinstance(modified.layers[1], PoolLayer)
            or modified.layers[1].kind != "avg"
        ):
            fail_scope("approach III must replace conv1 and insert an average pool after it")
        else:
            c_old = baseline.layers[0]
            c_new = modified.layers[0]
            if c_new.kernel <= c_old.kernel:
                fail_scope(
                    f"conv1 kernel must grow ({c_new.kernel} <= {c_old.kernel})"
                )
            if modified.layers[2:] != baseline.layers[1:]:
                fail_scope("approach III must leave the network remainder untouched")
            if mod_rows[1][0] != base_rows[0][0]:
                fail_interface(
                    f"inserted-pool output side {mod_rows[1][0]} differs from the original "
                    f"conv1 output side {base_rows[0][0]}"
                )
            base_cost = _scope_costs(baseline, [0])
            mod_cost = _scope_costs(modified, [0, 1])
            which = 0 if mode == "params" else 1
            if base_cost[which] != mod_cost[which]:
                fail_scope(
                    f"conv1+pool {mode} equality violated: original conv1 cost "
                    f"{base_cost[which]} != modified conv1+pool {mod_cost[which]}"
                )
            # When a second conv exists its output shape must match fully.
            down = _conv_positions(baseline, 2)
            if len(down) == 2:
                j = down[1]
                if mod_rows[j + 1][:2] != base_rows[j][:2]:
                    fail_interface(
                        f"conv2 output shape {mod_rows[j + 1][:2]} differs from original "
                        f"{base_rows[j][:2]}"
                    )

    elif approach == "IV":
        convs = _conv_positions(baseline, 2)
        if len(convs) != 2 or len(modified.layers) != len(baseline.layers):
            fail_scope("approach IV needs two conv layers and must not add or remove layers")
        else:
            i1, i2 = convs
            c1_old: ConvLayer = baseline.layers[i1]
            c1_new = modified.layers[i1]
            c2_old: ConvLayer = baseline.layers[i2]
            c2_new = modified.layers[i2]
            if not isinstance(c1_new, ConvLayer) or not isinstance(c2_new, ConvLayer):
                fail_scope("approach IV must keep conv layers in place")
            else:
                if c1_new.kernel <= c1_old.kernel:
                    fail_scope(
                        f"conv1 kernel must grow ({c1_new.kernel} <= {c1_old.kernel})"
                    )
                if c2_new.out_channels != c2_old.out_channels:
                    fail_scope(
                        f"conv2 filter count must stay fixed "
                        f"({c2_new.out_channels} != {c2_old.out_channels})"
                    )
                for j, (a, m) in enumerate(zip(baseline.layers, modified.layers)):
                    if j in (i1, i2):
                        continue
                    if a != m:
                        fail_scope(f"layer {j} changed; approach IV may only adjust the two convs")
                if mod_rows[i2][:2] != base_rows[i2][:2]:
                    fail_interface(
                        f"conv2 output shape {mod_rows[i2][:2]} differs from original "
                        f"{base_rows[i2][:2]}"
                    )
                base_cost = _scope_costs(baseline, [i1, i2])
                mod_cost = _scope_costs(modified, [i1, i2])
                which = 0 if mode == "params" else 1
                if base_cost[which] != mod_cost[which]:
                    fail_scope(
                        f"first-two-conv {mode} equality violated: original cost "
                        f"{base_cost[which]} != modified {mod_cost[which]}"
                    )

    else:
        fail_scope(f"unknown approach {approach!r}")

    return VerificationReport(scope_ok, dp, df, interface_ok, tuple(violations))


def oracle_enumerate(
    net: NetworkSpec,
    new_resolution: int,
    ranges: EnumRanges,
    approach: str,
    budget_mode: str,
) -> set[tuple[int, ...]]:
    """Naive full nested-loop enumeration of an approach's solution tuples.

    No algebraic pruning: derived quantities (new filter counts, fc sizes)
    are found by counting upward and testing the equality directly, stopping
    only once the strictly increasing candidate cost overshoots the target.
    Intended for tests; keep the ranges small.
    """
    if approach == "I":
        return _oracle_approach1(net, new_resolution, budget_mode)
    if approach == "II":
        return _oracle_approach2(net, new_resolution, ranges)
    if approach == "III":
        return _oracle_approach3(net, new_resolution, ranges, budget_mode)
    if approach == "IV":
        return _oracle_approach4(net, new_resolution, ranges, budget_mode)
    raise ValueError(f"unknown approach {approach!r}")


def _fc_head(net: NetworkSpec) -> tuple[int, int, int, int, int, int, int]:
    """(boundary index, U1, V1, Z1, Z2, fc1 bias, fc2 bias) of the GAP baseline."""
    base = _gap_head(net)
    b = next(i for i, l in enumerate(base.layers) if isinstance(l, GlobalAvgPoolLayer))
    tail = base.layers[b + 1 :]
    if len(tail) < 2 or not all(isinstance(l, DenseLayer) for l in tail[:2]):
        raise StructureMismatch("need two dense layers after the boundary")
    if b == 0:
        u1, v1 = net.input.spatial, net.input.channels
    else:
        rows = _walk(NetworkSpec(base.input, base.layers[:b]))
        u1, v1 = rows[-1][0], rows[-1][1]
    return (
        b,
        u1,
        v1,
        tail[0].out_features,
        tail[1].out_features,
        1 if tail[0].has_bias else 0,
        1 if tail[1].has_bias else 0,
    )


def _oracle_approach1(net: NetworkSpec, new_resolution: int, budget_mode: str) -> set:
    b, u1, v1, z1, z2, b1, b2 = _fc_head(net)
    if budget_mode == "params":
        return {(z1,)}
    base = _gap_head(net)
    if b == 0:
        u1p = new_resolution
    else:
        rows = _walk(NetworkSpec(TensorShape(new_resolution, net.input.channels), base.layers[:b]))
        u1p = rows[-1][0]
    target = u1 * u1 * v1 + v1 * z1 + b1 * z1 + z1 * z2 + b2 * z2
    found = set()
    for z in itertools.count(1):
        scope = u1p * u1p * v1 + v1 * z + b1 * z + z * z2 + b2 * z2
        if scope == target:
            found.add((z,))
        if scope >= target:
            break
    return found


def _oracle_approach2(net: NetworkSpec, new_resolution: int, ranges: EnumRanges) -> set:
    conv1: ConvLayer = net.layers[0]
    m1 = _out(net.input.spatial, conv1.kernel, conv1.stride, conv1.padding, 1)
    found = set()
    for p in range(ranges.padding[0], ranges.padding[1] + 1):
        for s in range(ranges.stride[0], ranges.stride[1] + 1):
            for d in range(ranges.dilation[0], ranges.dilation[1] + 1):
                if _out(new_resolution, conv1.kernel, s, p, d) == m1:
                    found.add((p, s, d))
    return found


def _oracle_approach3(
    net: NetworkSpec, new_resolution: int, ranges: EnumRanges, budget_mode: str
) -> set:
    conv1: ConvLayer = net.layers[0]
    d_in = net.input.channels
    b1 = 1 if conv1.has_bias else 0
    m1 = _out(net.input.spatial, conv1.kernel, conv1.stride, conv1.padding, conv1.dilation)
    k1, c1 = conv1.out_channels, conv1.kernel
    if budget_mode == "params":
        target = k1 * c1 * c1 * d_in + b1 * k1
    else:
        target = m1 * m1 * (c1 * c1 * d_in + b1) * k1

    found = set()
    for c1p in range(ranges.kernel[0], ranges.kernel[1] + 1):
        for p1 in range(ranges.padding[0], ranges.padding[1] + 1):
            for s1 in range(ranges.stride[0], ranges.stride[1] + 1):
                m1p = _out(new_resolution, c1p, s1, p1, 1)
                if m1p < 1:
                    continue
                for cp in range(ranges.kernel[0], ranges.kernel[1] + 1):
                    for pp in range(ranges.padding[0], ranges.padding[1] + 1):
                        for sp in range(ranges.stride[0], ranges.stride[1] + 1):
                            for k1p in itertools.count(1):
                                if budget_mode == "params":
                                    scope = k1p * c1p * c1p * d_in + b1 * k1p
                                else:
                                    scope = (
                                        m1p * m1p * (c1p * c1p * d_in + b1) * k1p
                                        + m1p * m1p * k1p
                                    )
                                if (
                                    scope == target
                                    and c1p > c1
                                    and _out(m1p, cp, sp, pp, 1) == m1
                                ):
                                    found.add((k1p, c1p, p1, s1, cp, pp, sp))
                                if scope >= target:
                                    break
    return found


def _oracle_approach4(
    net: NetworkSpec, new_resolution: int, ranges: EnumRanges, budget_mode: str
) -> set:
    convs = _conv_positions(net, 2)
    if len(convs) != 2:
        raise StructureMismatch("need two conv layers")
    i1, i2 = convs
    conv1: ConvLayer = net.layers[i1]
    conv2: ConvLayer = net.layers[i2]
    d_in = net.input.channels
    b1 = 1 if conv1.has_bias else 0
    b2 = 1 if conv2.has_bias else 0

    def pools(layers, n):
        for pool in layers:
            n = _out(n, pool.kernel, pool.stride, pool.padding, 1)
        return n

    n1 = pools(net.layers[:i1], net.input.spatial)
    m1 = _out(n1, conv1.kernel, conv1.stride, conv1.padding, conv1.dilation)
    m2 = _out(
        pools(net.layers[i1 + 1 : i2], m1),
        conv2.kernel,
        conv2.stride,
        conv2.padding,
        conv2.dilation,
    )
    k1, c1 = conv1.out_channels, conv1.kernel
    k2, c2 = conv2.out_channels, conv2.kernel
    if budget_mode == "params":
        target = (k1 * c1 * c1 * d_in + b1 * k1) + (k2 * c2 * c2 * k1 + b2 * k2)
    else:
        target = m1 * m1 * (c1 * c1 * d_in + b1) * k1 + m2 * m2 * (c2 * c2 * k1 + b2) * k2

    n1p = pools(net.layers[:i1], new_resolution)
    found = set()
    for c1p in range(ranges.kernel[0], ranges.kernel[1] + 1):
        for p1 in range(ranges.padding[0], ranges.padding[1] + 1):
            for s1 in range(ranges.stride[0], ranges.stride[1] + 1):
                m1p = _out(n1p, c1p, s1, p1, 1)
                if m1p < 1:
                    continue
                i2_in = pools(net.layers[i1 + 1 : i2], m1p)
                if i2_in < 1:
                    continue
                for c2p in range(ranges.kernel[0], ranges.kernel[1] + 1):
                    for p2 in range(ranges.padding[0], ranges.padding[1] + 1):
                        for s2 in range(ranges.stride[0], ranges.stride[1] + 1):
                            for k1p in itertools.count(1):
                                if budget_mode == "params":
                                    scope = (k1p * c1p * c1p * d_in + b1 * k1p) + (
                                        k2 * c2p * c2p * k1p + b2 * k2
                                    )
                                else:
                                    scope = m1p * m1p * (c1p * c1p * d_in + b1) * k1p + m2 * m2 * (
                                        c2p * c2p * k1p + b2
                                    ) * k2
                                if (
                                    scope == target
                                    and c1p > c1
                                    and _out(i2_in, c2p, s2, p2, 1) == m2
                                ):
                                    found.add((k1p, c1p, p1, s1, c2p, p2, s2))
                                if scope >= target:
                                    break
    return found
