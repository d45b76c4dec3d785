"""Command-line front end.

Subcommands: cost, solve, sweep, verify, sample. Exit codes are a stable
contract:

    0  success (an empty solution set is still success)
    1  verification failure
    2  parse or validation failure
    3  invalid geometry (a window does not fit its input)
    4  structure mismatch (the net lacks the layers an approach needs)

Seeds come from --seed, falling back to the NETRESCALE_SEED environment
variable, then 0.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path
from typing import Optional

from . import __version__, cost
from .arch import InvalidGeometry, NetworkSpec, validate
from .documents import (
    DocumentError,
    layer_to_doc,
    net_from_doc,
    net_to_doc,
    solution_from_doc,
    solution_to_doc,
)
from .search import (
    SearchConfig,
    drop_pooling,
    sample_candidates,
    sample_original_networks,
    sweep,
)
from .solvers import (
    APPROACHES,
    EnumRanges,
    SolutionCandidate,
    StructureMismatch,
    gap_head,
    solve,
)
from .verify import verify_candidate

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_PARSE = 2
EXIT_GEOMETRY = 3
EXIT_STRUCTURE = 4


class _CliError(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code


def _load_json(path: str) -> object:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise _CliError(EXIT_PARSE, f"{path}: cannot read file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _CliError(EXIT_PARSE, f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc


def _load_net(path: str) -> NetworkSpec:
    doc = _load_json(path)
    try:
        net = net_from_doc(doc)
    except DocumentError as exc:
        raise _CliError(EXIT_PARSE, f"{path}: {exc}") from exc
    report = validate(net)
    if report.violations:
        lines = "\n".join(f"  - {v}" for v in report.violations)
        raise _CliError(EXIT_PARSE, f"{path}: invalid architecture:\n{lines}")
    return net


def _seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("NETRESCALE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise _CliError(EXIT_PARSE, f"NETRESCALE_SEED must be an integer, got {env!r}") from exc
    return 0


def _ranges_from_args(args: argparse.Namespace) -> EnumRanges:
    kwargs = {}
    for name in ("kernel", "stride", "padding", "dilation"):
        pair = getattr(args, f"{name}_range")
        if pair is not None:
            kwargs[name] = (pair[0], pair[1])
    try:
        return EnumRanges(**kwargs)
    except ValueError as exc:
        raise _CliError(EXIT_PARSE, f"bad enumeration ranges: {exc}") from exc


def _fmt_int(value: int) -> str:
    return f"{value:,}"


def _layer_label(layer) -> str:
    obj = layer_to_doc(layer)
    kind = obj.pop("type")
    if kind == "conv":
        label = (
            f"conv {obj['out_channels']}@{obj['kernel']} s{obj['stride']} "
            f"p{obj['padding']} d{obj['dilation']}"
        )
        return label + (" +bias" if obj["bias"] else "")
    if kind == "pool":
        return f"{obj['kind']}-pool {obj['kernel']} s{obj['stride']} p{obj['padding']}"
    if kind == "dense":
        return f"dense {obj['out_features']}" + (" +bias" if obj["bias"] else "")
    return kind.replace("_", "-")


def cmd_cost(args: argparse.Namespace) -> int:
    net = _load_net(args.arch_file)
    try:
        report = cost.cost_report(net)
    except InvalidGeometry as exc:
        raise _CliError(EXIT_GEOMETRY, f"{args.arch_file}: {exc}") from exc

    if args.json:
        payload = {
            "name": net.name,
            "input": {"spatial": net.input.spatial, "channels": net.input.channels},
            "layers": [
                {
                    "layer": _layer_label(layer),
                    "out_spatial": c.out_shape.spatial,
                    "out_channels": c.out_shape.channels,
                    "params": c.params,
                    "flops": c.flops,
                }
                for layer, c in zip(net.layers, report.per_layer)
            ],
            "total_params": report.total_params,
            "total_flops": report.total_flops,
        }
        print(json.dumps(payload, indent=2))
        return EXIT_OK

    print(f"{net.name or args.arch_file}  (input {net.input.spatial}x{net.input.spatial}x{net.input.channels})")
    header = f"{'#':>2}  {'layer':<26} {'out shape':>12} {'params':>14} {'flops':>16}"
    print(header)
    print("-" * len(header))
    for i, (layer, c) in enumerate(zip(net.layers, report.per_layer)):
        shape = f"{c.out_shape.spatial}x{c.out_shape.spatial}x{c.out_shape.channels}"
        print(
            f"{i:>2}  {_layer_label(layer):<26} {shape:>12} "
            f"{_fmt_int(c.params):>14} {_fmt_int(c.flops):>16}"
        )
    print("-" * len(header))
    print(f"{'':>2}  {'total':<26} {'':>12} {_fmt_int(report.total_params):>14} {_fmt_int(report.total_flops):>16}")
    return EXIT_OK


def _candidate_row(c: SolutionCandidate) -> dict:
    return {
        "approach": c.approach,
        "budget_mode": c.budget_mode,
        "new_resolution": c.new_resolution,
        "scope": c.scope,
        "solution": list(c.solution_tuple),
        "param_delta": c.param_delta,
        "flops_delta": c.flops_delta,
    }


def _write_solutions(
    out_dir: str,
    net: NetworkSpec,
    candidates: list[SolutionCandidate],
) -> list[str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = re.sub(r"[^A-Za-z0-9._-]+", "-", net.name) or "net"
    paths = []
    for i, cand in enumerate(candidates):
        baseline = gap_head(net) if cand.approach == "I" else net
        base_report = cost.cost_report(baseline)
        mod_report = cost.cost_report(cand.modified_net)
        doc = solution_to_doc(
            baseline,
            cand,
            (base_report.total_params, base_report.total_flops),
            (mod_report.total_params, mod_report.total_flops),
            __version__,
        )
        name = f"{stem}_a{cand.approach}_{cand.budget_mode}_r{cand.new_resolution}_{i:03d}.json"
        path = out / name
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        paths.append(str(path))
    return paths


def cmd_solve(args: argparse.Namespace) -> int:
    net = _load_net(args.arch_file)
    if args.resolution <= net.input.spatial:
        raise _CliError(
            EXIT_PARSE,
            f"--resolution must exceed the input resolution {net.input.spatial}",
        )
    ranges = _ranges_from_args(args)
    approach = APPROACHES[args.approach - 1]
    try:
        candidates = solve(net, approach, args.resolution, ranges, args.mode)
    except StructureMismatch as exc:
        raise _CliError(EXIT_STRUCTURE, f"approach {approach}: {exc}") from exc
    except InvalidGeometry as exc:
        raise _CliError(EXIT_GEOMETRY, str(exc)) from exc

    if args.slack is not None:
        def keep(c: SolutionCandidate) -> bool:
            delta = c.param_delta if args.mode == "params" else c.flops_delta
            if args.signed_slack:
                return 0 < delta < args.slack
            return abs(delta) <= args.slack

        candidates = [c for c in candidates if keep(c)]

    if args.sample is not None and candidates:
        candidates = sample_candidates(candidates, args.sample, _seed(args))

    written = _write_solutions(args.out, net, candidates) if args.out else []

    if args.json:
        print(
            json.dumps(
                {
                    "approach": approach,
                    "budget_mode": args.mode,
                    "new_resolution": args.resolution,
                    "count": len(candidates),
                    "candidates": [_candidate_row(c) for c in candidates],
                    "written": written,
                },
                indent=2,
            )
        )
        return EXIT_OK

    print(
        f"approach {approach}, {args.mode} budget, resolution "
        f"{net.input.spatial} -> {args.resolution}: {len(candidates)} candidate(s)"
    )
    for c in candidates:
        print(
            f"  {c.solution_tuple}  param_delta={_fmt_int(c.param_delta)} "
            f"flops_delta={_fmt_int(c.flops_delta)}"
        )
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK


def _config_from_doc(doc: object) -> SearchConfig:
    if not isinstance(doc, dict):
        raise _CliError(EXIT_PARSE, "sweep config must be a JSON object")
    allowed = {
        "approaches",
        "budget_mode",
        "resolutions",
        "ranges",
        "slack",
        "signed_slack",
        "sample_count",
        "rng_seed",
    }
    unknown = set(doc) - allowed
    if unknown:
        raise _CliError(EXIT_PARSE, f"sweep config: unknown field(s) {sorted(unknown)}")
    kwargs = {}
    if "approaches" in doc:
        kwargs["approaches"] = tuple(doc["approaches"])
    if "budget_mode" in doc:
        kwargs["budget_mode"] = doc["budget_mode"]
    if "resolutions" in doc and doc["resolutions"] is not None:
        kwargs["resolution_set"] = tuple(doc["resolutions"])
    if "ranges" in doc:
        ranges_obj = doc["ranges"]
        if not isinstance(ranges_obj, dict) or set(ranges_obj) - {
            "kernel",
            "stride",
            "padding",
            "dilation",
        }:
            raise _CliError(EXIT_PARSE, "sweep config: bad ranges object")
        kwargs["ranges"] = EnumRanges(**{k: tuple(v) for k, v in ranges_obj.items()})
    for key in ("slack", "sample_count", "rng_seed"):
        if key in doc:
            kwargs[key] = doc[key]
    if "signed_slack" in doc:
        kwargs["signed_slack"] = bool(doc["signed_slack"])
    try:
        return SearchConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise _CliError(EXIT_PARSE, f"sweep config: {exc}") from exc


def cmd_sweep(args: argparse.Namespace) -> int:
    net = _load_net(args.arch_file)
    config = _config_from_doc(_load_json(args.config))
    result = sweep(net, config)

    if args.out:
        written = _write_solutions(args.out, net, result.candidates())
    else:
        written = []

    if args.json:
        payload = {
            "budget_mode": config.budget_mode,
            "slack": config.slack,
            "resolutions": {
                str(r): {
                    "counts": result.counts[r],
                    "candidates": [_candidate_row(c) for c in result.by_resolution[r]],
                }
                for r in sorted(result.by_resolution)
            },
            "total": result.total,
            "skipped_approaches": list(result.skipped_approaches),
            "written": written,
        }
        print(json.dumps(payload, indent=2))
        return EXIT_OK

    print(
        f"sweep of {net.name or args.arch_file}: budget={config.budget_mode} "
        f"slack={config.slack} approaches={','.join(config.approaches)}"
    )
    for note in result.skipped_approaches:
        print(f"  skipped {note}")
    header = f"{'resolution':>10}  {'kept':>6}  per-approach"
    print(header)
    for r in sorted(result.by_resolution):
        kept = result.by_resolution[r]
        per = "  ".join(f"{a}:{n}" for a, n in sorted(result.counts[r].items()))
        print(f"{r:>10}  {len(kept):>6}  {per}")
        if args.verbose:
            for c in kept:
                print(
                    f"{'':>10}  {c.approach} {c.solution_tuple} "
                    f"dP={_fmt_int(c.param_delta)} dF={_fmt_int(c.flops_delta)}"
                )
    print(f"total kept: {result.total}")
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    doc = _load_json(args.solution_file)
    try:
        original, candidate = solution_from_doc(doc)
    except DocumentError as exc:
        raise _CliError(EXIT_PARSE, f"{args.solution_file}: {exc}") from exc
    try:
        report = verify_candidate(original, candidate)
    except InvalidGeometry as exc:
        raise _CliError(EXIT_GEOMETRY, f"{args.solution_file}: {exc}") from exc

    # Cross-check the document's recorded totals against a fresh re-costing.
    doc_violations: list[str] = []
    baseline = gap_head(original) if candidate.approach == "I" else original
    base_report = cost.cost_report(baseline)
    mod_report = cost.cost_report(candidate.modified_net)
    recorded = doc["original_cost"]
    if (recorded["params"], recorded["flops"]) != (
        base_report.total_params,
        base_report.total_flops,
    ):
        doc_violations.append("recorded original_cost disagrees with recomputation")
    recorded = doc["modified_cost"]
    if (recorded["params"], recorded["flops"]) != (
        mod_report.total_params,
        mod_report.total_flops,
    ):
        doc_violations.append("recorded modified_cost disagrees with recomputation")

    violations = list(report.violations) + doc_violations
    passed = report.passed and not doc_violations
    if args.json:
        print(
            json.dumps(
                {
                    "passed": passed,
                    "scope_equality_holds": report.scope_equality_holds,
                    "interface_shape_match": report.interface_shape_match,
                    "whole_network_param_delta": report.whole_network_param_delta,
                    "whole_network_flops_delta": report.whole_network_flops_delta,
                    "violations": violations,
                },
                indent=2,
            )
        )
    else:
        print(f"scope equality:        {'ok' if report.scope_equality_holds else 'VIOLATED'}")
        print(f"interface shape match: {'ok' if report.interface_shape_match else 'VIOLATED'}")
        print(f"whole-network param delta: {_fmt_int(report.whole_network_param_delta)}")
        print(f"whole-network flops delta: {_fmt_int(report.whole_network_flops_delta)}")
        for v in violations:
            print(f"violation: {v}")
        print("PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_VERIFY_FAILED


def cmd_sample(args: argparse.Namespace) -> int:
    nets = sample_original_networks(args.dataset, args.count, _seed(args), args.resolution)
    if args.drop_pooling:
        nets = [drop_pooling(net) for net in nets]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    rows = []
    for i, net in enumerate(nets):
        report = cost.cost_report(net)
        doc = net_to_doc(net)
        path = out / f"{args.dataset}_orig_{i:02d}.json"
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        written.append(str(path))
        rows.append(
            {
                "file": str(path),
                "name": net.name,
                "resolution": net.input.spatial,
                "params": report.total_params,
                "flops": report.total_flops,
            }
        )
    if args.json:
        print(json.dumps({"count": len(rows), "originals": rows}, indent=2))
    else:
        for row in rows:
            print(
                f"{row['file']}  {row['name']}  r={row['resolution']} "
                f"params={_fmt_int(row['params'])} flops={_fmt_int(row['flops'])}"
            )
        print(f"wrote {len(rows)} architecture document(s) to {out}")
    return EXIT_OK


def _add_range_flags(parser: argparse.ArgumentParser) -> None:
    for name in ("kernel", "stride", "padding", "dilation"):
        parser.add_argument(
            f"--{name}-range",
            type=int,
            nargs=2,
            metavar=("LO", "HI"),
            default=None,
            help=f"inclusive {name} enumeration interval",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netrescale",
        description=(
            "Enumerate higher-resolution CNN variants whose parameter count or "
            "FLOPS exactly match the original's."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_cost = sub.add_parser("cost", help="per-layer and total parameter/FLOPS report")
    p_cost.add_argument("arch_file")
    p_cost.add_argument("--json", action="store_true")
    p_cost.set_defaults(func=cmd_cost)

    p_solve = sub.add_parser("solve", help="run one approach at one target resolution")
    p_solve.add_argument("arch_file")
    p_solve.add_argument("--approach", type=int, choices=(1, 2, 3, 4), required=True)
    p_solve.add_argument("--mode", choices=("params", "flops"), required=True)
    p_solve.add_argument("--resolution", type=int, required=True, help="target input resolution")
    p_solve.add_argument("--slack", type=int, default=None, help="whole-network budget slack filter")
    p_solve.add_argument(
        "--signed-slack",
        action="store_true",
        help="keep candidates with 0 < delta < slack instead of |delta| <= slack",
    )
    p_solve.add_argument("--sample", type=int, default=None, help="sample this many candidates")
    p_solve.add_argument("--seed", type=int, default=None)
    p_solve.add_argument("--out", default=None, help="directory for solution documents")
    p_solve.add_argument("--json", action="store_true")
    _add_range_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="sweep resolutions and approaches per a config file")
    p_sweep.add_argument("arch_file")
    p_sweep.add_argument("--config", required=True, help="JSON sweep configuration")
    p_sweep.add_argument("--out", default=None, help="directory for solution documents")
    p_sweep.add_argument("--json", action="store_true")
    p_sweep.add_argument("--verbose", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="independently re-check a solution document")
    p_verify.add_argument("solution_file")
    p_verify.add_argument("--json", action="store_true")
    p_verify.set_defaults(func=cmd_verify)

    p_sample = sub.add_parser("sample", help="sample original networks from the experiment grid")
    p_sample.add_argument("--dataset", choices=("mnist", "fmnist", "cifar10"), required=True)
    p_sample.add_argument("--count", type=int, required=True)
    p_sample.add_argument("--seed", type=int, default=None)
    p_sample.add_argument("--resolution", type=int, default=None, help="restrict to one input size")
    p_sample.add_argument(
        "--drop-pooling", action="store_true", help="remove pooling layers (two-conv protocol)"
    )
    p_sample.add_argument("--out", required=True)
    p_sample.add_argument("--json", action="store_true")
    p_sample.set_defaults(func=cmd_sample)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except StructureMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STRUCTURE
    except InvalidGeometry as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY


if __name__ == "__main__":
    sys.exit(main())
