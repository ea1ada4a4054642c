"""Semi-supervised inference for the mean, variance and treatment effects of a response."""

from .causal import AteInference, FoldNuisance, TesInference, estimate_ate, estimate_tes
from .data import (
    CausalLabeledSet,
    CausalUnlabeledSet,
    FoldError,
    FoldPartition,
    LabeledSet,
    RunConfig,
    UnlabeledSet,
    augment,
    make_partition,
    make_rng,
)
from .estimators import (
    MeanInference,
    MultiPartitionInference,
    VarianceInference,
    estimate_mean,
    estimate_mean_multi,
    estimate_variance,
    moment_cache,
    sample_mean_ci,
    sample_variance_ci,
    z_quantile,
)
from .nuisance import LearnerSpec, fit_lasso, fit_lasso_cv, fit_logistic_lasso, fit_slope, fit_sqrt_lasso

__all__ = [
    "AteInference", "CausalLabeledSet", "CausalUnlabeledSet", "FoldError", "FoldNuisance",
    "FoldPartition", "LabeledSet", "LearnerSpec", "MeanInference", "MultiPartitionInference",
    "RunConfig", "TesInference", "UnlabeledSet", "VarianceInference", "augment", "estimate_ate",
    "estimate_mean", "estimate_mean_multi", "estimate_tes", "estimate_variance", "fit_lasso",
    "fit_lasso_cv", "fit_logistic_lasso", "fit_slope", "fit_sqrt_lasso", "make_partition",
    "make_rng", "moment_cache", "sample_mean_ci", "sample_variance_ci", "z_quantile",
]
