"""Secondary acceptance: the qualitative accuracy-comparison protocol.

Both criteria need the MNIST download and several desk-scale hours, so they
are gated twice: RESCALE_HARNESS_FULL=1 opts into the runtime, and the
dataset must be fetchable (this sandbox's network reaches package mirrors
only, so the tests skip here with an explicit reason). The same pipeline is
exercised end to end on the offline digits dataset by the smoke tests and
the committed demo results.

Criterion 1 (two-conv rebalance, equal params, MNIST, bases 7 and 14,
10 originals x 4 solutions x 3 repeats): the best solution's mean accuracy
strictly exceeds the original's for at least 7 of 10 originals per base.

Criterion 2 (GAP-head approach): mean accuracy at the highest resolution is
below the original's at the base resolution.
"""

import os
import shutil
import statistics

import pytest

from rescale_harness import DatasetUnavailable, TrainConfig, load_dataset, run_protocol, summarize
from rescale_harness.cli import main

FULL = os.environ.get("RESCALE_HARNESS_FULL") == "1"

pytestmark = pytest.mark.skipif(
    shutil.which("netrescale") is None, reason="netrescale CLI not on PATH"
)


def _require_mnist(tmp_path):
    if not FULL:
        pytest.skip("multi-hour protocol; set RESCALE_HARNESS_FULL=1 to run")
    try:
        load_dataset("mnist", root=str(tmp_path / "data"))
    except DatasetUnavailable as exc:
        pytest.skip(f"MNIST not obtainable in this environment: {exc}")


def test_best_solution_beats_original_for_most_models(tmp_path):
    _require_mnist(tmp_path)
    ws = tmp_path / "ws4"
    assert (
        main(
            [
                "prepare", "--dataset", "mnist", "--base-resolutions", "7,14",
                "--originals", "10", "--solutions", "4", "--approach", "4",
                "--mode", "params", "--seed", "0", "--out", str(ws),
            ]
        )
        == 0
    )
    results = run_protocol(ws, TrainConfig(), repeats=3)
    summary = summarize(results)
    for base in (7, 14):
        improved, total = summary.improved_fraction(base)
        print(f"SECONDARY base {base}: best solution beat original for {improved}/{total}")
        assert total >= 7, f"too few originals with solutions at base {base}"
        assert improved >= 7, f"only {improved}/{total} improved at base {base}"


def test_gap_head_accuracy_drops_with_resolution(tmp_path):
    _require_mnist(tmp_path)
    ws = tmp_path / "ws1"
    assert (
        main(
            [
                "prepare", "--dataset", "mnist", "--base-resolutions", "7,14",
                "--originals", "10", "--solutions", "4", "--approach", "1",
                "--mode", "params", "--seed", "0", "--out", str(ws),
            ]
        )
        == 0
    )
    results = run_protocol(ws, TrainConfig(), repeats=3)
    summary = summarize(results)
    for base in (7, 14):
        rows = [o for o in summary.per_original if o.base_resolution == base and o.solution_accuracies]
        top = max(r for o in rows for r in o.solution_resolutions)
        at_top = [
            acc
            for o in rows
            for acc, r in zip(o.solution_accuracies, o.solution_resolutions)
            if r == top
        ]
        original_mean = statistics.fmean(o.original_accuracy for o in rows)
        top_mean = statistics.fmean(at_top)
        print(
            f"SECONDARY base {base}: original {original_mean:.4f} vs "
            f"resolution-{top} mean {top_mean:.4f}"
        )
        assert top_mean < original_mean
