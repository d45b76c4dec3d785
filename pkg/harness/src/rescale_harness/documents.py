"""Readers for the rescaling tool's JSON interchange files.

The harness consumes architecture documents and solution documents produced
by the `netrescale` CLI. Parsing is reimplemented here (this package does
not import the tool) against the documented schema, format_version 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional


class HarnessDocumentError(ValueError):
    """A document is missing something the harness needs."""


@dataclass(frozen=True)
class LayerDoc:
    type: str
    out_channels: int = 0
    kernel: int = 0
    stride: int = 1
    padding: int = 0
    dilation: int = 1
    bias: bool = False
    kind: str = ""
    out_features: int = 0


@dataclass(frozen=True)
class ArchDoc:
    name: str
    spatial: int
    channels: int
    layers: tuple[LayerDoc, ...]


@dataclass(frozen=True)
class SolutionDoc:
    approach: str
    budget_mode: str
    new_resolution: int
    scope: str
    original: ArchDoc
    modified: ArchDoc
    original_params: int
    original_flops: int
    modified_params: int
    modified_flops: int


def _get(obj: dict, key: str, where: str):
    if key not in obj:
        raise HarnessDocumentError(f"{where}: missing field {key!r}")
    return obj[key]


def parse_layer(obj: dict, index: int) -> LayerDoc:
    where = f"layers[{index}]"
    kind = _get(obj, "type", where)
    if kind == "conv":
        return LayerDoc(
            type="conv",
            out_channels=_get(obj, "out_channels", where),
            kernel=_get(obj, "kernel", where),
            stride=obj.get("stride", 1),
            padding=obj.get("padding", 0),
            dilation=obj.get("dilation", 1),
            bias=obj.get("bias", False),
        )
    if kind == "pool":
        return LayerDoc(
            type="pool",
            kind=_get(obj, "kind", where),
            kernel=_get(obj, "kernel", where),
            stride=obj.get("stride", 1),
            padding=obj.get("padding", 0),
        )
    if kind in ("global_avg_pool", "flatten"):
        return LayerDoc(type=kind)
    if kind == "dense":
        return LayerDoc(
            type="dense",
            out_features=_get(obj, "out_features", where),
            bias=obj.get("bias", False),
        )
    raise HarnessDocumentError(f"{where}: unknown layer type {kind!r}")


def parse_arch(doc: dict) -> ArchDoc:
    if not isinstance(doc, dict):
        raise HarnessDocumentError("architecture document must be a JSON object")
    version = _get(doc, "format_version", "document")
    if version != 1:
        raise HarnessDocumentError(f"unsupported format_version {version}")
    input_obj = _get(doc, "input", "document")
    layers = tuple(parse_layer(l, i) for i, l in enumerate(_get(doc, "layers", "document")))
    return ArchDoc(
        name=doc.get("name", ""),
        spatial=_get(input_obj, "spatial", "input"),
        channels=_get(input_obj, "channels", "input"),
        layers=layers,
    )


def parse_solution(doc: dict) -> SolutionDoc:
    if not isinstance(doc, dict):
        raise HarnessDocumentError("solution document must be a JSON object")
    version = _get(doc, "format_version", "document")
    if version != 1:
        raise HarnessDocumentError(f"unsupported format_version {version}")
    original_cost = _get(doc, "original_cost", "document")
    modified_cost = _get(doc, "modified_cost", "document")
    return SolutionDoc(
        approach=_get(doc, "approach", "document"),
        budget_mode=_get(doc, "budget_mode", "document"),
        new_resolution=_get(doc, "new_resolution", "document"),
        scope=_get(doc, "scope", "document"),
        original=parse_arch(_get(doc, "original", "document")),
        modified=parse_arch(_get(doc, "modified", "document")),
        original_params=_get(original_cost, "params", "original_cost"),
        original_flops=_get(original_cost, "flops", "original_cost"),
        modified_params=_get(modified_cost, "params", "modified_cost"),
        modified_flops=_get(modified_cost, "flops", "modified_cost"),
    )


def load_arch(path: str | Path) -> ArchDoc:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_arch(json.load(fh))


def load_solution(path: str | Path) -> SolutionDoc:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_solution(json.load(fh))
