"""The training protocol: original/solution pairs, repeats, CSV records.

A prepared workspace (see cli.prepare) holds, per base resolution, a set of
original architecture documents and, per original, a set of solution
documents. `run_protocol` trains every model `repeats` times and appends one
row per run to results.csv:

    model_id, dataset, approach, budget_mode, base_resolution, resolution,
    repeat, accuracy, params, flops

Model selection is fully determined by the workspace content and seeds;
training itself is seeded per repeat but not bitwise-reproducible across
torch builds. Per-run failures are recorded in failures.csv and the
protocol continues.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import time
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import torch
from torch import nn

from .data import SplitTensors, at_base_resolution, load_dataset, upsample_nearest
from .documents import ArchDoc, load_arch, load_solution
from .models import ModelBuildError, build_model, count_parameters

RESULT_COLUMNS = (
    "model_id",
    "dataset",
    "approach",
    "budget_mode",
    "base_resolution",
    "resolution",
    "repeat",
    "accuracy",
    "params",
    "flops",
)


@dataclass(frozen=True)
class TrainConfig:
    """All training hyperparameters; serialized next to the results."""

    optimizer: str = "adam"
    learning_rate: float = 1e-3
    batch_size: int = 128
    epochs: int = 3
    train_subset: Optional[int] = None  # None = full training split
    base_seed: int = 0
    downsample: str = "area"
    upsample: str = "nearest"

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, doc: dict) -> "TrainConfig":
        return cls(**doc)


@dataclass(frozen=True)
class RunResult:
    model_id: str
    dataset: str
    approach: str
    budget_mode: str
    base_resolution: int
    resolution: int
    repeat: int
    accuracy: float
    params: int
    flops: int

    def row(self) -> dict:
        return dataclasses.asdict(self)


def train_once(
    model: nn.Module,
    split: SplitTensors,
    resolution: int,
    config: TrainConfig,
    seed: int,
) -> float:
    """Train on the split (upsampled to `resolution`) and return top-1 test
    accuracy on the full test portion."""
    torch.manual_seed(seed)
    train_x, train_y = split.train_x, split.train_y
    if config.train_subset is not None and config.train_subset < len(train_y):
        keep = torch.randperm(len(train_y), generator=torch.Generator().manual_seed(config.base_seed))
        keep = keep[: config.train_subset]
        train_x, train_y = train_x[keep], train_y[keep]

    if config.optimizer != "adam":
        raise ValueError(f"unsupported optimizer {config.optimizer!r}")
    opt = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    loss_fn = nn.CrossEntropyLoss()

    model.train()
    n = len(train_y)
    order_gen = torch.Generator().manual_seed(seed)
    for _ in range(config.epochs):
        order = torch.randperm(n, generator=order_gen)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            x = upsample_nearest(train_x[idx], resolution)
            opt.zero_grad()
            loss = loss_fn(model(x), train_y[idx])
            loss.backward()
            opt.step()

    model.eval()
    correct = 0
    with torch.no_grad():
        for start in range(0, len(split.test_y), 512):
            x = upsample_nearest(split.test_x[start : start + 512], resolution)
            pred = model(x).argmax(dim=1)
            correct += (pred == split.test_y[start : start + 512]).sum().item()
    return correct / len(split.test_y)


@dataclass(frozen=True)
class WorkspaceEntry:
    base_resolution: int
    original_path: Path
    solution_paths: tuple[Path, ...]


def read_manifest(workspace: Path) -> tuple[str, str, str, list[WorkspaceEntry]]:
    """(dataset, approach, budget_mode, entries) from a prepared workspace."""
    manifest = json.loads((workspace / "manifest.json").read_text())
    entries = [
        WorkspaceEntry(
            base_resolution=e["base_resolution"],
            original_path=workspace / e["original"],
            solution_paths=tuple(workspace / s for s in e["solutions"]),
        )
        for e in manifest["entries"]
    ]
    return manifest["dataset"], manifest["approach"], manifest["budget_mode"], entries


def run_protocol(
    workspace: Path,
    config: TrainConfig,
    repeats: int = 3,
    log=print,
) -> list[RunResult]:
    """Train every original and solution in the workspace, `repeats` times.

    Appends rows to <workspace>/results.csv as runs finish (single writer)
    and records per-run failures in <workspace>/failures.csv without
    aborting the protocol.
    """
    dataset, approach, budget_mode, entries = read_manifest(workspace)
    native = load_dataset(dataset, root=str(workspace / "data"))

    results_path = workspace / "results.csv"
    failures_path = workspace / "failures.csv"
    new_file = not results_path.exists()
    results: list[RunResult] = []

    with open(results_path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        if new_file:
            writer.writeheader()

        def record(result: RunResult) -> None:
            writer.writerow(result.row())
            fh.flush()
            results.append(result)

        def fail(model_id: str, exc: Exception) -> None:
            new = not failures_path.exists()
            with open(failures_path, "a", newline="", encoding="utf-8") as ff:
                fw = csv.writer(ff)
                if new:
                    fw.writerow(["model_id", "error"])
                fw.writerow([model_id, f"{type(exc).__name__}: {exc}"])
            log(f"  FAILED {model_id}: {exc}")

        for entry in entries:
            base_split = at_base_resolution(native, entry.base_resolution)
            orig_id = entry.original_path.stem
            jobs: list[tuple[str, ArchDoc, int, str, str, int, int]] = []
            # (model_id, arch, train/eval resolution, approach, mode, params, flops)
            # The comparison original comes from the solution documents: for
            # the GAP-head approach it is the boundary-converted baseline,
            # not the sampled flatten net.
            if entry.solution_paths:
                sol0 = load_solution(entry.solution_paths[0])
                orig_doc = sol0.original
                orig_params, orig_flops = sol0.original_params, sol0.original_flops
            else:
                orig_doc = load_arch(entry.original_path)
                orig_params, orig_flops = count_parameters(build_model(orig_doc)), 0
            jobs.append(
                (
                    f"b{entry.base_resolution}-{orig_id}",
                    orig_doc,
                    entry.base_resolution,
                    "original",
                    budget_mode,
                    orig_params,
                    orig_flops,
                )
            )
            for j, sol_path in enumerate(entry.solution_paths):
                sol = load_solution(sol_path)
                jobs.append(
                    (
                        f"b{entry.base_resolution}-{orig_id}-s{j}",
                        sol.modified,
                        sol.new_resolution,
                        sol.approach,
                        sol.budget_mode,
                        sol.modified_params,
                        sol.modified_flops,
                    )
                )

            for model_id, doc, resolution, run_approach, mode, params, flops in jobs:
                for repeat in range(1, repeats + 1):
                    t0 = time.monotonic()
                    try:
                        seed = _run_seed(config.base_seed, model_id, repeat)
                        torch.manual_seed(seed)  # weight init
                        model = build_model(doc, expected_params=params)
                        acc = train_once(model, base_split, resolution, config, seed)
                    except (ModelBuildError, ValueError, RuntimeError) as exc:
                        fail(model_id, exc)
                        continue
                    record(
                        RunResult(
                            model_id=model_id,
                            dataset=dataset,
                            approach=run_approach,
                            budget_mode=mode,
                            base_resolution=entry.base_resolution,
                            resolution=resolution,
                            repeat=repeat,
                            accuracy=acc,
                            params=params,
                            flops=flops,
                        )
                    )
                    log(
                        f"  {model_id} r{resolution} repeat {repeat}: "
                        f"acc={acc:.4f} ({time.monotonic() - t0:.1f}s)"
                    )
    return results


def _run_seed(base_seed: int, model_id: str, repeat: int) -> int:
    """Stable per-run seed (process-salted hash() would not reproduce)."""
    digest = zlib.crc32(f"{model_id}:{repeat}".encode("utf-8"))
    return (base_seed * 1_000_003 + digest) % 2**31


def load_results(path: Path) -> list[RunResult]:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(
                RunResult(
                    model_id=row["model_id"],
                    dataset=row["dataset"],
                    approach=row["approach"],
                    budget_mode=row["budget_mode"],
                    base_resolution=int(row["base_resolution"]),
                    resolution=int(row["resolution"]),
                    repeat=int(row["repeat"]),
                    accuracy=float(row["accuracy"]),
                    params=int(row["params"]),
                    flops=int(row["flops"]),
                )
            )
    return out
