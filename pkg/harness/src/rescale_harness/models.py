"""Instantiate trainable torch models from architecture documents.

A document fully pins every weight tensor shape; after building we assert
the framework-reported trainable parameter count against the expected total
from the document, naming the offending layer when anything disagrees.
"""

from __future__ import annotations

from typing import Optional

import torch
from torch import nn

from .documents import ArchDoc, LayerDoc


class ModelBuildError(RuntimeError):
    """Document and realized model disagree; message names the layer."""


def _out_side(n: int, kernel: int, stride: int, padding: int, dilation: int = 1) -> int:
    return (n - dilation * (kernel - 1) - 1 + 2 * padding) // stride + 1


def _pool_module(layer: LayerDoc) -> nn.Module:
    if layer.padding <= layer.kernel // 2:
        if layer.kind == "max":
            return nn.MaxPool2d(layer.kernel, layer.stride, layer.padding)
        return nn.AvgPool2d(layer.kernel, layer.stride, layer.padding, count_include_pad=True)
    # torch rejects pool padding beyond half the kernel; explicit zero padding
    # followed by an unpadded pool computes the same thing (activations are
    # non-negative post-ReLU, and average counts padded zeros either way).
    pool: nn.Module
    if layer.kind == "max":
        pool = nn.MaxPool2d(layer.kernel, layer.stride, 0)
    else:
        pool = nn.AvgPool2d(layer.kernel, layer.stride, 0, count_include_pad=True)
    return nn.Sequential(nn.ZeroPad2d(layer.padding), pool)


def build_model(arch: ArchDoc, expected_params: Optional[int] = None) -> nn.Module:
    """Sequential model matching the document's layer shapes exactly.

    ReLU follows each conv and each dense layer except the last dense
    (logits). expected_params, when given, is cross-checked against the
    realized trainable parameter count.
    """
    modules: list[nn.Module] = []
    s, c = arch.spatial, arch.channels
    flat = False  # whether the running tensor is (B, features)
    last_dense_index = max(
        (i for i, l in enumerate(arch.layers) if l.type == "dense"), default=None
    )
    for i, layer in enumerate(arch.layers):
        where = f"layer {i} ({layer.type})"
        if layer.type == "conv":
            if flat:
                raise ModelBuildError(f"{where}: conv after the dense boundary")
            m = _out_side(s, layer.kernel, layer.stride, layer.padding, layer.dilation)
            if m < 1:
                raise ModelBuildError(
                    f"{where}: kernel {layer.kernel} does not fit {s}x{s} input"
                )
            modules.append(
                nn.Conv2d(
                    c,
                    layer.out_channels,
                    layer.kernel,
                    stride=layer.stride,
                    padding=layer.padding,
                    dilation=layer.dilation,
                    bias=layer.bias,
                )
            )
            modules.append(nn.ReLU())
            s, c = m, layer.out_channels
        elif layer.type == "pool":
            if flat:
                raise ModelBuildError(f"{where}: pool after the dense boundary")
            m = _out_side(s, layer.kernel, layer.stride, layer.padding, 1)
            if m < 1:
                raise ModelBuildError(
                    f"{where}: kernel {layer.kernel} does not fit {s}x{s} input"
                )
            modules.append(_pool_module(layer))
            s = m
        elif layer.type == "global_avg_pool":
            if flat:
                raise ModelBuildError(f"{where}: pooling after the dense boundary")
            modules.append(nn.AdaptiveAvgPool2d(1))
            modules.append(nn.Flatten())
            s, flat = 1, True
        elif layer.type == "flatten":
            modules.append(nn.Flatten())
            s, c, flat = 1, s * s * c, True
        elif layer.type == "dense":
            if not flat:
                modules.append(nn.Flatten())
                s, c, flat = 1, s * s * c, True
            modules.append(nn.Linear(c, layer.out_features, bias=layer.bias))
            if i != last_dense_index:
                modules.append(nn.ReLU())
            c = layer.out_features
        else:
            raise ModelBuildError(f"{where}: unknown layer type")
    model = nn.Sequential(*modules)
    if expected_params is not None:
        realized = count_parameters(model)
        if realized != expected_params:
            raise ModelBuildError(
                f"model realizes {realized} trainable parameters, document says "
                f"{expected_params} (check per-layer shapes)"
            )
    return model


def count_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters() if p.requires_grad)
