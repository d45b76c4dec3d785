"""JSON interchange formats: architecture and solution documents.

Architecture documents round-trip losslessly to and from NetworkSpec;
unknown fields are rejected so typos fail loudly instead of silently
changing a network. Solution documents are self-contained: they embed the
comparison baseline, the modified architecture, and both cost totals, so a
training harness needs no other input.

The schema is versioned through a top-level "format_version" field,
currently 1.
"""

from __future__ import annotations

from typing import Any

from .arch import (
    ConvLayer,
    DenseLayer,
    FlattenLayer,
    GlobalAvgPoolLayer,
    Layer,
    NetworkSpec,
    PoolLayer,
    TensorShape,
)
from .solvers import SolutionCandidate

FORMAT_VERSION = 1


class DocumentError(ValueError):
    """A document does not conform to the schema."""


def _require(obj: dict, key: str, kind: type, where: str) -> Any:
    if key not in obj:
        raise DocumentError(f"{where}: missing field {key!r}")
    value = obj[key]
    # bool is an int subclass; keep the two apart.
    if kind is int and isinstance(value, bool):
        raise DocumentError(f"{where}: field {key!r} must be an integer, got a boolean")
    if not isinstance(value, kind):
        raise DocumentError(f"{where}: field {key!r} must be {kind.__name__}, got {type(value).__name__}")
    return value


def _optional(obj: dict, key: str, kind: type, default: Any, where: str) -> Any:
    if key not in obj:
        return default
    return _require(obj, key, kind, where)


def _reject_unknown(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise DocumentError(f"{where}: unknown field(s) {sorted(unknown)}")


def layer_to_doc(layer: Layer) -> dict:
    if isinstance(layer, ConvLayer):
        return {
            "type": "conv",
            "out_channels": layer.out_channels,
            "kernel": layer.kernel,
            "stride": layer.stride,
            "padding": layer.padding,
            "dilation": layer.dilation,
            "bias": layer.has_bias,
        }
    if isinstance(layer, PoolLayer):
        return {
            "type": "pool",
            "kind": layer.kind,
            "kernel": layer.kernel,
            "stride": layer.stride,
            "padding": layer.padding,
        }
    if isinstance(layer, GlobalAvgPoolLayer):
        return {"type": "global_avg_pool"}
    if isinstance(layer, FlattenLayer):
        return {"type": "flatten"}
    if isinstance(layer, DenseLayer):
        return {"type": "dense", "out_features": layer.out_features, "bias": layer.has_bias}
    raise TypeError(f"unknown layer type {type(layer).__name__}")


def layer_from_doc(obj: Any, index: int) -> Layer:
    where = f"layers[{index}]"
    if not isinstance(obj, dict):
        raise DocumentError(f"{where}: must be an object")
    kind = _require(obj, "type", str, where)
    if kind == "conv":
        _reject_unknown(obj, {"type", "out_channels", "kernel", "stride", "padding", "dilation", "bias"}, where)
        return ConvLayer(
            out_channels=_require(obj, "out_channels", int, where),
            kernel=_require(obj, "kernel", int, where),
            stride=_optional(obj, "stride", int, 1, where),
            padding=_optional(obj, "padding", int, 0, where),
            dilation=_optional(obj, "dilation", int, 1, where),
            has_bias=_optional(obj, "bias", bool, False, where),
        )
    if kind == "pool":
        _reject_unknown(obj, {"type", "kind", "kernel", "stride", "padding"}, where)
        return PoolLayer(
            kind=_require(obj, "kind", str, where),
            kernel=_require(obj, "kernel", int, where),
            stride=_optional(obj, "stride", int, 1, where),
            padding=_optional(obj, "padding", int, 0, where),
        )
    if kind == "global_avg_pool":
        _reject_unknown(obj, {"type"}, where)
        return GlobalAvgPoolLayer()
    if kind == "flatten":
        _reject_unknown(obj, {"type"}, where)
        return FlattenLayer()
    if kind == "dense":
        _reject_unknown(obj, {"type", "out_features", "bias"}, where)
        return DenseLayer(
            out_features=_require(obj, "out_features", int, where),
            has_bias=_optional(obj, "bias", bool, False, where),
        )
    raise DocumentError(f"{where}: unknown layer type {kind!r}")


def net_to_doc(net: NetworkSpec) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "name": net.name,
        "input": {"spatial": net.input.spatial, "channels": net.input.channels},
        "layers": [layer_to_doc(l) for l in net.layers],
    }


def net_from_doc(doc: Any) -> NetworkSpec:
    if not isinstance(doc, dict):
        raise DocumentError("architecture document must be a JSON object")
    _reject_unknown(doc, {"format_version", "name", "input", "layers"}, "document")
    version = _require(doc, "format_version", int, "document")
    if version != FORMAT_VERSION:
        raise DocumentError(f"unsupported format_version {version}")
    name = _optional(doc, "name", str, "", "document")
    input_obj = _require(doc, "input", dict, "document")
    _reject_unknown(input_obj, {"spatial", "channels"}, "input")
    shape = TensorShape(
        _require(input_obj, "spatial", int, "input"),
        _require(input_obj, "channels", int, "input"),
    )
    layers_obj = _require(doc, "layers", list, "document")
    layers = tuple(layer_from_doc(l, i) for i, l in enumerate(layers_obj))
    return NetworkSpec(shape, layers, name)


_SOLUTION_FIELDS = {
    "format_version",
    "tool_version",
    "approach",
    "budget_mode",
    "new_resolution",
    "scope",
    "solution",
    "original",
    "modified",
    "original_cost",
    "modified_cost",
    "deltas",
}


def _cost_obj(obj: dict, key: str) -> dict:
    sub = _require(obj, key, dict, "document")
    _reject_unknown(sub, {"params", "flops"}, key)
    return {
        "params": _require(sub, "params", int, key),
        "flops": _require(sub, "flops", int, key),
    }


def solution_to_doc(
    baseline: NetworkSpec,
    candidate: SolutionCandidate,
    baseline_cost: tuple[int, int],
    modified_cost: tuple[int, int],
    tool_version: str,
) -> dict:
    """Self-contained record of one original/solution pair.

    baseline is the comparison original (for approach I: the original with
    its boundary converted to global average pooling); costs are
    (params, flops) totals.
    """
    return {
        "format_version": FORMAT_VERSION,
        "tool_version": tool_version,
        "approach": candidate.approach,
        "budget_mode": candidate.budget_mode,
        "new_resolution": candidate.new_resolution,
        "scope": candidate.scope,
        "solution": list(candidate.solution_tuple),
        "original": net_to_doc(baseline),
        "modified": net_to_doc(candidate.modified_net),
        "original_cost": {"params": baseline_cost[0], "flops": baseline_cost[1]},
        "modified_cost": {"params": modified_cost[0], "flops": modified_cost[1]},
        "deltas": {
            "params": candidate.param_delta,
            "flops": candidate.flops_delta,
        },
    }


def solution_from_doc(doc: Any) -> tuple[NetworkSpec, SolutionCandidate]:
    """Rebuild (baseline original, candidate) from a solution document."""
    if not isinstance(doc, dict):
        raise DocumentError("solution document must be a JSON object")
    _reject_unknown(doc, _SOLUTION_FIELDS, "document")
    version = _require(doc, "format_version", int, "document")
    if version != FORMAT_VERSION:
        raise DocumentError(f"unsupported format_version {version}")
    _require(doc, "tool_version", str, "document")
    approach = _require(doc, "approach", str, "document")
    if approach not in ("I", "II", "III", "IV"):
        raise DocumentError(f"unknown approach {approach!r}")
    mode = _require(doc, "budget_mode", str, "document")
    if mode not in ("params", "flops"):
        raise DocumentError(f"unknown budget_mode {mode!r}")
    solution = _require(doc, "solution", list, "document")
    if not all(isinstance(x, int) and not isinstance(x, bool) for x in solution):
        raise DocumentError("solution tuple must contain integers")
    deltas = _cost_obj(doc, "deltas")
    _cost_obj(doc, "original_cost")
    _cost_obj(doc, "modified_cost")
    original = net_from_doc(_require(doc, "original", dict, "document"))
    modified = net_from_doc(_require(doc, "modified", dict, "document"))
    candidate = SolutionCandidate(
        approach=approach,
        budget_mode=mode,
        new_resolution=_require(doc, "new_resolution", int, "document"),
        modified_net=modified,
        scope=_require(doc, "scope", str, "document"),
        solution_tuple=tuple(solution),
        param_delta=deltas["params"],
        flops_delta=deltas["flops"],
    )
    return original, candidate
