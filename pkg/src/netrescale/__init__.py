"""netrescale: resize a CNN's input resolution without changing its budget.

Given an architecture and a higher target input resolution, enumerate
modified architectures whose parameter count or FLOPS exactly equal the
original's, verify every candidate independently, and export original/
solution pairs for training.
"""

__version__ = "0.1.0"

from .arch import (
    ConvLayer,
    DenseLayer,
    FlattenLayer,
    GlobalAvgPoolLayer,
    InvalidGeometry,
    Layer,
    NetworkSpec,
    PoolLayer,
    TensorShape,
    ValidationReport,
    at_resolution,
    boundary_index,
    conv_output_size,
    insert_layer,
    propagate_shapes,
    replace_layer,
    validate,
)
from .cost import (
    CostReport,
    LayerCost,
    conv_flops,
    conv_params,
    cost_report,
    dense_flops,
    dense_params,
    pool_flops,
)
from .search import (
    EmptyCandidateList,
    SearchConfig,
    SweepResult,
    drop_pooling,
    lenet_net,
    original_network_grid,
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
    solve_approach1,
    solve_approach2,
    solve_approach3,
    solve_approach4,
)
from .verify import VerificationReport, oracle_enumerate, verify_candidate

__all__ = [
    "__version__",
    "APPROACHES",
    "ConvLayer",
    "CostReport",
    "DenseLayer",
    "EmptyCandidateList",
    "EnumRanges",
    "FlattenLayer",
    "GlobalAvgPoolLayer",
    "InvalidGeometry",
    "Layer",
    "LayerCost",
    "NetworkSpec",
    "PoolLayer",
    "SearchConfig",
    "SolutionCandidate",
    "StructureMismatch",
    "SweepResult",
    "TensorShape",
    "ValidationReport",
    "VerificationReport",
    "at_resolution",
    "boundary_index",
    "conv_flops",
    "conv_output_size",
    "conv_params",
    "cost_report",
    "dense_flops",
    "dense_params",
    "drop_pooling",
    "gap_head",
    "insert_layer",
    "lenet_net",
    "replace_layer",
    "oracle_enumerate",
    "original_network_grid",
    "pool_flops",
    "propagate_shapes",
    "sample_candidates",
    "sample_original_networks",
    "solve",
    "solve_approach1",
    "solve_approach2",
    "solve_approach3",
    "solve_approach4",
    "sweep",
    "validate",
    "verify_candidate",
]
