"""Cost-aware Bayesian optimization over multiple information sources.

The central objects: ``SearchSpace`` normalizes box-bounded (optionally
log-scaled) coordinates into the unit cube; ``GaussianProcess`` is a
scikit-learn-style GP regressor; ``build_agp``/``propose`` implement the
discrepancy-gated augmented surrogate and its cost-aware acquisition; the
``run_miso_agp``/``run_vanilla_bo`` loops produce comparable traces; and the
harness turns a JSON config into trace and summary files.
"""

from .acquisition import (
    BetaSchedule,
    expected_improvement,
    lcb,
    optimize_acquisition,
    probability_of_improvement,
)
from .agp import (
    AugmentedDataset,
    AugmentedRecord,
    MisoProposal,
    SourceData,
    SourceModelSet,
    build_agp,
    discrepancy,
    miso_acquisition_value,
    propose,
    select_reliable,
)
from .errors import (
    BoundsError,
    ConfigValidationError,
    EmptyAugmentedSetError,
    IllConditionedKernelError,
    InitializationError,
    MisoboError,
    NumericalInstabilityError,
    ObjectiveEvaluationError,
    ProposalFailureError,
    RunAbortedError,
    SourceEvaluationError,
    UndefinedIncumbentError,
)
from .gp import GaussianProcess, mle_train
from .harness import (
    ExperimentConfig,
    load_config,
    parse_config,
    read_trace_rows,
    run_experiment,
    summarize,
)
from .kernels import (
    KERNEL_FAMILIES,
    Matern32,
    Matern52,
    RationalQuadratic,
    SquaredExponential,
    make_kernel,
)
from .loop import (
    LoopConfig,
    RunTrace,
    TraceRow,
    augmented_best_seen,
    best_seen,
    run_miso_agp,
    run_vanilla_bo,
)
from .sources import (
    AnalyticSource,
    Benchmark,
    ExternalConnection,
    ExternalSource,
    benchmark_names,
    evaluate,
    make_benchmark,
)
from .spaces import Dimension, SearchSpace, latin_hypercube_unit

__version__ = "0.1.0"

__all__ = [
    "AnalyticSource", "AugmentedDataset", "AugmentedRecord", "Benchmark",
    "BetaSchedule", "BoundsError", "ConfigValidationError", "Dimension",
    "EmptyAugmentedSetError", "ExperimentConfig", "ExternalConnection",
    "ExternalSource", "GaussianProcess", "IllConditionedKernelError",
    "InitializationError", "KERNEL_FAMILIES", "LoopConfig", "Matern32",
    "Matern52", "MisoProposal", "MisoboError", "NumericalInstabilityError",
    "ObjectiveEvaluationError", "ProposalFailureError", "RationalQuadratic",
    "RunAbortedError", "RunTrace", "SearchSpace", "SourceData",
    "SourceEvaluationError", "SourceModelSet", "SquaredExponential",
    "TraceRow", "UndefinedIncumbentError", "augmented_best_seen",
    "benchmark_names", "best_seen", "build_agp", "discrepancy", "evaluate",
    "expected_improvement", "latin_hypercube_unit", "lcb", "load_config",
    "make_benchmark", "make_kernel", "miso_acquisition_value", "mle_train",
    "optimize_acquisition", "parse_config", "probability_of_improvement",
    "propose", "read_trace_rows", "run_experiment", "run_miso_agp",
    "run_vanilla_bo", "select_reliable", "summarize",
]
