"""Subgroup-based adaptive trial designs.

Exact posterior inference over median-split partitions of a biomarker
space, the adaptive allocation / arm-exclusion trial engine built on it,
benchmark comparator designs, a Monte Carlo study harness, and a live
trial conduct service.
"""

from .errors import (
    CatalogSizeError,
    ConfigError,
    DegenerateDesignError,
    DimensionMismatchError,
    DuplicateOutcomeError,
    EmptyPostRunInError,
    InvalidPhaseError,
    JournalError,
    NoDataError,
    NonConvergenceError,
    StalePosteriorError,
    SubaError,
    UndefinedSubsetError,
    UnknownPatientError,
)
from .comparators import (
    ARConfig,
    ARCounts,
    RegFit,
    ar_assign,
    er_assign,
    probit_fit,
    reg_assign,
)
from .design import (
    DesignConfig,
    FinalReport,
    GridSpec,
    Phase,
    StopReason,
    SubaTrial,
)
from .partitions import (
    PartitionCatalog,
    PartitionLayout,
    PriorParams,
    ThresholdedPartition,
    bind_thresholds,
    build_catalog,
    enumerate_layouts,
    export_catalog,
    import_catalog,
    layout_count,
    leaf_of,
    log_prior,
    normalize_catalog,
)
from .posterior import (
    BetaHyper,
    PartitionSummary,
    PosteriorState,
    dump_posterior,
    export_co_clustering,
    log_marginal_likelihood,
    predictive_q,
    rebuild_posterior,
)
from .scenarios import (
    classify_subsets,
    draw_biomarkers,
    response_matrix,
    true_response,
    truth_subset,
)
from .simulate import (
    StudyConfig,
    StudyResult,
    SweepResult,
    run_replicate,
    run_study,
    sensitivity_sweep,
)

__all__ = [
    "CatalogSizeError",
    "ConfigError",
    "DegenerateDesignError",
    "DimensionMismatchError",
    "DuplicateOutcomeError",
    "EmptyPostRunInError",
    "InvalidPhaseError",
    "JournalError",
    "NoDataError",
    "NonConvergenceError",
    "StalePosteriorError",
    "SubaError",
    "UndefinedSubsetError",
    "UnknownPatientError",
    "ARConfig",
    "ARCounts",
    "RegFit",
    "ar_assign",
    "er_assign",
    "probit_fit",
    "reg_assign",
    "DesignConfig",
    "FinalReport",
    "GridSpec",
    "Phase",
    "StopReason",
    "SubaTrial",
    "PartitionCatalog",
    "PartitionLayout",
    "PriorParams",
    "ThresholdedPartition",
    "bind_thresholds",
    "build_catalog",
    "enumerate_layouts",
    "export_catalog",
    "import_catalog",
    "layout_count",
    "leaf_of",
    "log_prior",
    "normalize_catalog",
    "BetaHyper",
    "PartitionSummary",
    "PosteriorState",
    "dump_posterior",
    "export_co_clustering",
    "log_marginal_likelihood",
    "predictive_q",
    "rebuild_posterior",
    "classify_subsets",
    "draw_biomarkers",
    "response_matrix",
    "true_response",
    "truth_subset",
    "StudyConfig",
    "StudyResult",
    "SweepResult",
    "run_replicate",
    "run_study",
    "sensitivity_sweep",
]

__version__ = "0.1.0"
