"""Training harness for budget-matched CNN original/solution pairs.

Consumes architecture and solution documents exported by the `netrescale`
CLI, instantiates the models in torch, trains each several times, and
aggregates the original-vs-best-solution accuracy comparison.
"""

__version__ = "0.1.0"

from .data import DATASETS, PROFILES, DatasetUnavailable, load_dataset
from .documents import ArchDoc, HarnessDocumentError, SolutionDoc, load_arch, load_solution
from .models import ModelBuildError, build_model, count_parameters
from .protocol import RunResult, TrainConfig, load_results, run_protocol, train_once
from .summarize import ComparisonSummary, EmptyResults, OriginalSummary, summarize

__all__ = [
    "__version__",
    "ArchDoc",
    "ComparisonSummary",
    "DATASETS",
    "DatasetUnavailable",
    "EmptyResults",
    "HarnessDocumentError",
    "ModelBuildError",
    "OriginalSummary",
    "PROFILES",
    "RunResult",
    "SolutionDoc",
    "TrainConfig",
    "build_model",
    "count_parameters",
    "load_arch",
    "load_dataset",
    "load_results",
    "load_solution",
    "run_protocol",
    "summarize",
    "train_once",
]
