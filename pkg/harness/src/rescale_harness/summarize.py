"""Aggregate run results into the original-vs-best-solution comparison.

For every original model we average its repeats, average each matched
solution's repeats, and record the best solution mean; per base resolution
everything is averaged over the originals. Scatter figures plot originals
(black) against their matched solutions (red), one panel per base
resolution.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .protocol import RunResult


class EmptyResults(ValueError):
    """No run results to summarize."""


@dataclass(frozen=True)
class OriginalSummary:
    model_id: str
    base_resolution: int
    original_accuracy: float  # mean over repeats
    solution_accuracies: tuple[float, ...]  # per-solution means
    solution_resolutions: tuple[int, ...]

    @property
    def best_solution_accuracy(self) -> float:
        return max(self.solution_accuracies) if self.solution_accuracies else float("nan")

    @property
    def improved(self) -> bool:
        """Strictly better than the original at any matched solution."""
        return bool(self.solution_accuracies) and (
            self.best_solution_accuracy > self.original_accuracy
        )


@dataclass(frozen=True)
class ComparisonSummary:
    per_original: tuple[OriginalSummary, ...]
    # base resolution -> (mean original accuracy, mean best-solution accuracy)
    per_resolution: dict[int, tuple[float, float]] = field(default_factory=dict)

    def improved_fraction(self, base_resolution: int) -> tuple[int, int]:
        rows = [
            o
            for o in self.per_original
            if o.base_resolution == base_resolution and o.solution_accuracies
        ]
        return sum(1 for o in rows if o.improved), len(rows)

    def to_json(self) -> dict:
        return {
            "per_original": [
                {
                    "model_id": o.model_id,
                    "base_resolution": o.base_resolution,
                    "original_accuracy": o.original_accuracy,
                    "solution_accuracies": list(o.solution_accuracies),
                    "solution_resolutions": list(o.solution_resolutions),
                    "best_solution_accuracy": o.best_solution_accuracy
                    if o.solution_accuracies
                    else None,
                    "improved": o.improved,
                }
                for o in self.per_original
            ],
            "per_resolution": {
                str(r): {"original_mean": a, "best_solution_mean": b}
                for r, (a, b) in self.per_resolution.items()
            },
            "improved_fractions": {
                str(r): "{}/{}".format(*self.improved_fraction(r))
                for r in sorted({o.base_resolution for o in self.per_original})
            },
        }


def summarize(results: list[RunResult]) -> ComparisonSummary:
    if not results:
        raise EmptyResults("no run results")

    # model_id -> mean accuracy over repeats (plus one representative row)
    by_model: dict[str, list[RunResult]] = {}
    for r in results:
        by_model.setdefault(r.model_id, []).append(r)
    means = {mid: statistics.fmean(r.accuracy for r in rows) for mid, rows in by_model.items()}

    originals = sorted(mid for mid in means if not _is_solution(mid))
    per_original = []
    for mid in originals:
        rows = by_model[mid]
        sol_ids = sorted(m for m in means if _is_solution(m) and m.startswith(mid + "-s"))
        per_original.append(
            OriginalSummary(
                model_id=mid,
                base_resolution=rows[0].base_resolution,
                original_accuracy=means[mid],
                solution_accuracies=tuple(means[s] for s in sol_ids),
                solution_resolutions=tuple(by_model[s][0].resolution for s in sol_ids),
            )
        )

    per_resolution: dict[int, tuple[float, float]] = {}
    for base in sorted({o.base_resolution for o in per_original}):
        rows = [o for o in per_original if o.base_resolution == base and o.solution_accuracies]
        if rows:
            per_resolution[base] = (
                statistics.fmean(o.original_accuracy for o in rows),
                statistics.fmean(o.best_solution_accuracy for o in rows),
            )
    return ComparisonSummary(tuple(per_original), per_resolution)


def _is_solution(model_id: str) -> bool:
    tail = model_id.rsplit("-", 1)[-1]
    return tail.startswith("s") and tail[1:].isdigit()


def write_summary(summary: ComparisonSummary, out_dir: Path) -> Path:
    path = out_dir / "summary.json"
    path.write_text(json.dumps(summary.to_json(), indent=2) + "\n", encoding="utf-8")
    return path


def plot_comparison(summary: ComparisonSummary, out_dir: Path) -> list[Path]:
    """One scatter panel per base resolution: originals in black at their
    base resolution, matched solutions in red at theirs; plus a per-original
    dot plot in the same style."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    paths = []
    bases = sorted({o.base_resolution for o in summary.per_original})

    fig, axes = plt.subplots(1, max(len(bases), 1), figsize=(5 * max(len(bases), 1), 4), squeeze=False)
    for ax, base in zip(axes[0], bases):
        rows = [o for o in summary.per_original if o.base_resolution == base]
        for i, o in enumerate(rows):
            ax.scatter([i], [o.original_accuracy], color="black", s=60, zorder=3)
            for acc in o.solution_accuracies:
                ax.scatter([i], [acc], color="red", s=25, alpha=0.8, zorder=2)
        n_sol = sum(len(o.solution_accuracies) for o in rows)
        ax.set_title(f"base {base}x{base} (num exp = {n_sol})")
        ax.set_xlabel("original model")
        ax.set_ylabel("test accuracy")
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    per_model_path = out_dir / "comparison_per_original.png"
    fig.savefig(per_model_path, dpi=120)
    plt.close(fig)
    paths.append(per_model_path)

    fig, ax = plt.subplots(figsize=(5, 4))
    for base, (orig_mean, best_mean) in sorted(summary.per_resolution.items()):
        ax.scatter([base], [orig_mean], color="black", s=60, label="original" if base == min(summary.per_resolution) else None)
        ax.scatter([base], [best_mean], color="red", s=60, label="best solution" if base == min(summary.per_resolution) else None)
    ax.set_xlabel("base resolution")
    ax.set_ylabel("mean test accuracy")
    ax.grid(True, alpha=0.3)
    if summary.per_resolution:
        ax.legend()
    fig.tight_layout()
    mean_path = out_dir / "comparison_means.png"
    fig.savefig(mean_path, dpi=120)
    plt.close(fig)
    paths.append(mean_path)
    return paths
