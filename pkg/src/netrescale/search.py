"""Resolution sweep, budget-slack filtering, and seeded sampling.

The sweep realizes the outer search loop: for every candidate resolution and
every enabled approach, run the solver, re-cost every candidate from scratch,
and keep the ones whose whole-network budget delta passes the slack filter.
Per-scope equalities are already guaranteed by the solvers; the slack filter
operates on whole-network totals because that is what the overall constraint
is stated on.

Sampling helpers are deterministic under a seed so experiment selections are
reproducible; training nondeterminism is out of scope here.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import cost
from .arch import (
    ConvLayer,
    DenseLayer,
    FlattenLayer,
    InvalidGeometry,
    NetworkSpec,
    PoolLayer,
    TensorShape,
    validate,
)
from .solvers import (
    APPROACHES,
    BUDGET_MODES,
    EnumRanges,
    SolutionCandidate,
    StructureMismatch,
    gap_head,
    solve,
)


class EmptyCandidateList(Exception):
    """Asked to sample from an empty candidate list."""


@dataclass(frozen=True)
class SearchConfig:
    """Sweep settings.

    resolution_set = None means "all integers in (N, 2N]" for the swept net.
    slack is the whole-network budget tolerance: a candidate is kept iff
    |delta| <= slack, or, with signed_slack, iff 0 < delta < slack (the
    additional-budget reading). slack 0 with the default filter demands
    exact whole-network equality.
    """

    approaches: tuple[str, ...] = APPROACHES
    budget_mode: str = "params"
    resolution_set: Optional[tuple[int, ...]] = None
    ranges: EnumRanges = field(default_factory=EnumRanges)
    slack: int = 0
    signed_slack: bool = False
    sample_count: int = 4
    rng_seed: int = 0

    def __post_init__(self) -> None:
        for a in self.approaches:
            if a not in APPROACHES:
                raise ValueError(f"unknown approach {a!r}")
        if self.budget_mode not in BUDGET_MODES:
            raise ValueError(f"unknown budget mode {self.budget_mode!r}")
        if self.slack < 0:
            raise ValueError("slack must be >= 0")
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")


@dataclass(frozen=True)
class SweepResult:
    """Filtered candidates per resolution plus summary counts."""

    by_resolution: dict[int, tuple[SolutionCandidate, ...]]
    counts: dict[int, dict[str, int]]  # resolution -> approach -> kept count
    skipped_approaches: tuple[str, ...]  # structure mismatches, once per approach

    @property
    def total(self) -> int:
        return sum(len(v) for v in self.by_resolution.values())

    def candidates(self) -> list[SolutionCandidate]:
        out = []
        for r in sorted(self.by_resolution):
            out.extend(self.by_resolution[r])
        return out


def passes_slack(delta: int, slack: int, signed: bool) -> bool:
    if signed:
        return 0 < delta < slack
    return abs(delta) <= slack


def sweep(net: NetworkSpec, config: SearchConfig) -> SweepResult:
    """Run every enabled solver at every resolution and filter by slack.

    Deterministic: resolutions ascending, approaches in Roman order, solver
    lists already sorted by solution tuple. Per-candidate geometry failures
    are exclusions, never aborts.
    """
    n = net.input.spatial
    if config.resolution_set is None:
        resolutions: Sequence[int] = range(n + 1, 2 * n + 1)
    else:
        resolutions = sorted(set(config.resolution_set))

    by_resolution: dict[int, tuple[SolutionCandidate, ...]] = {}
    counts: dict[int, dict[str, int]] = {}
    skipped: list[str] = []
    for r in resolutions:
        kept: list[SolutionCandidate] = []
        row_counts: dict[str, int] = {}
        for approach in APPROACHES:
            if approach not in config.approaches:
                continue
            try:
                found = solve(net, approach, r, config.ranges, config.budget_mode)
            except StructureMismatch as exc:
                note = f"approach {approach}: {exc}"
                if note not in skipped:
                    skipped.append(note)
                continue
            n_kept = 0
            for cand in found:
                try:
                    base = cost.cost_report(gap_head(net) if approach == "I" else net)
                    mod = cost.cost_report(cand.modified_net)
                except InvalidGeometry:
                    continue
                dp = mod.total_params - base.total_params
                df = mod.total_flops - base.total_flops
                # Solver-reported deltas must agree with the re-costing.
                assert (dp, df) == (cand.param_delta, cand.flops_delta)
                delta = dp if config.budget_mode == "params" else df
                if passes_slack(delta, config.slack, config.signed_slack):
                    kept.append(cand)
                    n_kept += 1
            row_counts[approach] = n_kept
        by_resolution[r] = tuple(kept)
        counts[r] = row_counts
    return SweepResult(by_resolution, counts, tuple(skipped))


def sample_candidates(
    candidates: Sequence[SolutionCandidate], k: int, seed: int
) -> list[SolutionCandidate]:
    """k distinct candidates drawn by a seeded pseudo-random permutation.

    Returns the whole list when it has at most k entries. Raises
    EmptyCandidateList on an empty input.
    """
    if not candidates:
        raise EmptyCandidateList("no candidates to sample from")
    if len(candidates) <= k:
        return list(candidates)
    rng = random.Random(seed)
    return rng.sample(list(candidates), k)


_PROFILES = {
    "mnist": dict(images=(7, 14, 28), kernels=(2, 3, 5), pools=(1, 2), filters=10, channels=1),
    "fmnist": dict(images=(7, 14, 28), kernels=(2, 3, 5), pools=(1, 2), filters=10, channels=1),
    "cifar10": dict(images=(8, 16, 32), kernels=(3, 5, 7), pools=(1, 2), filters=30, channels=3),
}

_FC_HIDDEN = 50
_CLASSES = 10


def lenet_net(
    image: int,
    channels: int,
    filters: int,
    conv_kernel: int,
    pool_kernel: int,
    name: str = "",
) -> NetworkSpec:
    """conv -> pool -> conv -> pool -> fc -> fc with no biases.

    Pooling uses stride = kernel (non-overlapping); kernel 1 is identity
    pooling. Conv layers are unpadded with stride 1.
    """
    return NetworkSpec(
        TensorShape(image, channels),
        (
            ConvLayer(filters, conv_kernel),
            PoolLayer("max", pool_kernel, stride=pool_kernel),
            ConvLayer(filters, conv_kernel),
            PoolLayer("max", pool_kernel, stride=pool_kernel),
            FlattenLayer(),
            DenseLayer(_FC_HIDDEN),
            DenseLayer(_CLASSES),
        ),
        name,
    )


def original_network_grid(dataset_profile: str, image_size: Optional[int] = None) -> list[NetworkSpec]:
    """All valid grid combinations for a dataset profile, in grid order.

    Combinations whose shape propagation fails are discarded. image_size
    restricts the grid to one input resolution.
    """
    try:
        profile = _PROFILES[dataset_profile]
    except KeyError:
        raise ValueError(f"unknown dataset profile {dataset_profile!r}") from None
    images = profile["images"] if image_size is None else (image_size,)
    nets = []
    for image in images:
        for ck in profile["kernels"]:
            for pk in profile["pools"]:
                net = lenet_net(
                    image,
                    profile["channels"],
                    profile["filters"],
                    ck,
                    pk,
                    name=f"{dataset_profile}-n{image}-k{ck}-p{pk}",
                )
                if validate(net).ok:
                    nets.append(net)
    return nets


def sample_original_networks(
    dataset_profile: str,
    count: int,
    seed: int,
    image_size: Optional[int] = None,
) -> list[NetworkSpec]:
    """count seeded draws from the valid grid of original networks.

    Distinct architectures are drawn first (a seeded shuffle of the grid);
    once the grid is exhausted further draws repeat architectures, since the
    grid is small. Deterministic for a given seed.
    """
    grid = original_network_grid(dataset_profile, image_size)
    if not grid:
        return []
    rng = random.Random(seed)
    shuffled = grid[:]
    rng.shuffle(shuffled)
    out = []
    while len(out) < count:
        need = count - len(out)
        if need >= len(shuffled):
            out.extend(shuffled)
        else:
            out.extend(shuffled[:need])
    return out[:count]


def drop_pooling(net: NetworkSpec) -> NetworkSpec:
    """The net with every pooling layer removed (protocol variant used when
    rescaling adjusts the first two conv layers directly)."""
    layers = tuple(l for l in net.layers if not isinstance(l, PoolLayer))
    return NetworkSpec(net.input, layers, net.name)
