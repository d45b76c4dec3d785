"""Harness command line: prepare a workspace, run the protocol, summarize.

`prepare` produces the workspace by driving the `netrescale` CLI (the
budget tool's public interface): it samples original networks, solves for
equal-budget higher-resolution variants, and lays the exported JSON
documents out per base resolution. `run` trains everything and appends to
results.csv; `summarize` writes summary.json and the comparison figures.
"""

from __future__ import annotations

import argparse
import json
import os
import shutil
import subprocess
import sys
from pathlib import Path

from .data import PROFILES
from .protocol import TrainConfig, load_results, run_protocol
from .summarize import EmptyResults, plot_comparison, summarize, write_summary

APPROACH_NAMES = {1: "I", 2: "II", 3: "III", 4: "IV"}


def _netrescale(args: list[str]) -> None:
    binary = os.environ.get("NETRESCALE_BIN", "netrescale")
    if shutil.which(binary) is None:
        raise SystemExit(
            f"cannot find {binary!r}; install the netrescale package or set NETRESCALE_BIN"
        )
    proc = subprocess.run([binary, *args], capture_output=True, text=True)
    if proc.returncode != 0:
        raise SystemExit(
            f"netrescale {' '.join(args)} failed (exit {proc.returncode}):\n{proc.stderr}"
        )


# Valid two-conv originals for the offline 8x8 digits dataset, per base
# resolution: (conv1 kernel, conv2 kernel) pairs that propagate.
_DIGITS_KERNEL_PAIRS = {4: ((2, 2), (2, 3), (3, 2)), 8: ((2, 2), (2, 3), (3, 2), (3, 3), (5, 2))}


def _digits_original(base: int, k1: int, k2: int) -> dict:
    return {
        "format_version": 1,
        "name": f"digits-n{base}-k{k1}{k2}",
        "input": {"spatial": base, "channels": 1},
        "layers": [
            {"type": "conv", "out_channels": 10, "kernel": k1, "stride": 1, "padding": 0, "dilation": 1, "bias": False},
            {"type": "conv", "out_channels": 10, "kernel": k2, "stride": 1, "padding": 0, "dilation": 1, "bias": False},
            {"type": "flatten"},
            {"type": "dense", "out_features": 20, "bias": False},
            {"type": "dense", "out_features": 10, "bias": False},
        ],
    }


def _write_digits_originals(out_dir: Path, base: int, count: int) -> list[Path]:
    pairs = _DIGITS_KERNEL_PAIRS.get(base)
    if pairs is None:
        raise SystemExit(f"digits supports base resolutions {sorted(_DIGITS_KERNEL_PAIRS)}, not {base}")
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(count):
        k1, k2 = pairs[i % len(pairs)]
        doc = _digits_original(base, k1, k2)
        path = out_dir / f"digits_orig_{i:02d}.json"
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        paths.append(path)
    return paths


def cmd_prepare(args: argparse.Namespace) -> int:
    workspace = Path(args.out)
    workspace.mkdir(parents=True, exist_ok=True)
    approach = APPROACH_NAMES[args.approach]
    bases = [int(b) for b in args.base_resolutions.split(",")]
    native, _, pyramid = PROFILES[args.dataset]
    for b in bases:
        if args.dataset != "digits" and b not in pyramid:
            print(f"note: base {b} is outside the usual {args.dataset} pyramid {pyramid}", file=sys.stderr)

    entries = []
    for base in bases:
        base_dir = workspace / f"base{base}"
        orig_dir = base_dir / "originals"
        if args.dataset == "digits":
            originals = _write_digits_originals(orig_dir, base, args.originals)
        else:
            sample_args = [
                "sample",
                "--dataset", args.dataset,
                "--count", str(args.originals),
                "--seed", str(args.seed + base),
                "--resolution", str(base),
                "--out", str(orig_dir),
            ]
            if args.approach == 4:
                # Two-conv rebalance adjusts conv1/conv2 directly; the
                # protocol drops the pooling layers for it.
                sample_args.append("--drop-pooling")
            _netrescale(sample_args)
            originals = sorted(orig_dir.glob("*.json"))

        target = 2 * base
        for i, orig in enumerate(originals):
            sol_dir = base_dir / f"solutions_{orig.stem}"
            solve_args = [
                "solve", str(orig),
                "--approach", str(args.approach),
                "--mode", args.mode,
                "--resolution", str(target),
                "--sample", str(args.solutions),
                "--seed", str(args.seed * 1000 + base * 10 + i),
                "--out", str(sol_dir),
                "--kernel-range", str(args.kernel_range[0]), str(args.kernel_range[1]),
            ]
            _netrescale(solve_args)
            solutions = sorted(sol_dir.glob("*.json")) if sol_dir.exists() else []
            entries.append(
                {
                    "base_resolution": base,
                    "original": str(orig.relative_to(workspace)),
                    "solutions": [str(s.relative_to(workspace)) for s in solutions],
                }
            )
            print(f"base {base}: {orig.name} -> {len(solutions)} solution(s)")

    manifest = {
        "dataset": args.dataset,
        "approach": approach,
        "budget_mode": args.mode,
        "base_resolutions": bases,
        "kernel_range": list(args.kernel_range),
        "seed": args.seed,
        "entries": entries,
    }
    (workspace / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    config = TrainConfig(base_seed=args.seed)
    (workspace / "config.json").write_text(
        json.dumps(config.to_json(), indent=2) + "\n", encoding="utf-8"
    )
    total_solutions = sum(len(e["solutions"]) for e in entries)
    print(f"workspace {workspace}: {len(entries)} original(s), {total_solutions} solution(s)")
    if total_solutions == 0:
        print("warning: no solutions were found; check the approach/ranges", file=sys.stderr)
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    workspace = Path(args.workspace)
    config = TrainConfig.from_json(json.loads((workspace / "config.json").read_text()))
    overrides = {}
    for name in ("epochs", "batch_size", "train_subset", "learning_rate"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if overrides:
        config = TrainConfig(**{**config.to_json(), **overrides})
        (workspace / "config.json").write_text(
            json.dumps(config.to_json(), indent=2) + "\n", encoding="utf-8"
        )
    results = run_protocol(workspace, config, repeats=args.repeats)
    print(f"recorded {len(results)} run(s) in {workspace / 'results.csv'}")
    return 0


def cmd_summarize(args: argparse.Namespace) -> int:
    workspace = Path(args.workspace)
    try:
        results = load_results(workspace / "results.csv")
        summary = summarize(results)
    except (FileNotFoundError, EmptyResults) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    path = write_summary(summary, workspace)
    figures = plot_comparison(summary, workspace)

    for base in sorted({o.base_resolution for o in summary.per_original}):
        rows = [o for o in summary.per_original if o.base_resolution == base]
        improved, total = summary.improved_fraction(base)
        print(f"base {base}x{base}: {len(rows)} original(s)")
        for o in rows:
            sols = ", ".join(f"{a:.4f}" for a in o.solution_accuracies) or "-"
            marker = "+" if o.improved else " "
            print(
                f"  {marker} {o.model_id}: original {o.original_accuracy:.4f}  "
                f"solutions [{sols}]"
            )
        if base in summary.per_resolution:
            orig_mean, best_mean = summary.per_resolution[base]
            print(
                f"  means over originals: original {orig_mean:.4f}, "
                f"best-solution {best_mean:.4f}, improved {improved}/{total}"
            )
    print(f"wrote {path}")
    for f in figures:
        print(f"wrote {f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rescale-harness",
        description="Train exported original/solution CNN pairs and compare accuracy.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_prep = sub.add_parser("prepare", help="build a workspace via the netrescale CLI")
    p_prep.add_argument("--dataset", choices=("mnist", "fmnist", "cifar10", "digits"), required=True)
    p_prep.add_argument("--base-resolutions", required=True, help="comma separated, e.g. 7,14")
    p_prep.add_argument("--originals", type=int, default=10)
    p_prep.add_argument("--solutions", type=int, default=4)
    p_prep.add_argument("--approach", type=int, choices=(1, 2, 3, 4), default=4)
    p_prep.add_argument("--mode", choices=("params", "flops"), default="params")
    p_prep.add_argument("--seed", type=int, default=0)
    p_prep.add_argument(
        "--kernel-range",
        type=int,
        nargs=2,
        metavar=("LO", "HI"),
        default=(1, 10),
        help="solver kernel interval; the default widens the usual 3..8 so the "
        "equal-params two-conv rebalance has solutions on the small grid nets",
    )
    p_prep.add_argument("--out", required=True)
    p_prep.set_defaults(func=cmd_prepare)

    p_run = sub.add_parser("run", help="train all models in a workspace")
    p_run.add_argument("workspace")
    p_run.add_argument("--repeats", type=int, default=3)
    p_run.add_argument("--epochs", type=int, default=None)
    p_run.add_argument("--batch-size", type=int, default=None)
    p_run.add_argument("--train-subset", type=int, default=None)
    p_run.add_argument("--learning-rate", type=float, default=None)
    p_run.set_defaults(func=cmd_run)

    p_sum = sub.add_parser("summarize", help="aggregate results.csv and plot comparisons")
    p_sum.add_argument("workspace")
    p_sum.set_defaults(func=cmd_summarize)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
