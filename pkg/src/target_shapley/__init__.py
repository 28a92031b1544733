"""Target Shapley effects of failure indicators, estimated with importance sampling."""

from .aggregation import (
    ShapleyReport,
    StandardizationMap,
    allocate_budget,
    fit_standardization,
    indicator_variance,
    permutation_aggregate,
    subset_aggregate,
)
from .benchmarks import FailureProblem, GaussianLinearSpec, cantilever_beam, fire_spread, gaussian_linear
from .distributions import GaussianMixtureModel, GaussianModel, TransformedInputModel, model_from_config
from .harness import ExperimentConfig, RunRecord, run, summarize
from .indices import (
    ConditionalIndexEstimate,
    t_ev_dmc_given_model,
    t_ev_dmc_is_given_model,
    t_ev_dmc_is_knn,
    t_ev_dmc_knn,
    t_ve_pf_given_model,
    t_ve_pf_is_given_model,
    t_ve_pf_is_knn,
    t_ve_pf_knn,
)
from .oracles import (
    GaussianLinearOptimalDensity,
    gl_failure_probability,
    gl_target_closed_sobol,
    gl_target_ev,
    gl_target_shapley,
)
from .rare_event import (
    CEConfig,
    WeightedFailureSample,
    cross_entropy_fit,
    is_failure_probability,
    is_pt_squared_unbiased,
    mc_failure_probability,
    variance_of_mean_unbiased,
)

__version__ = "0.1.0"

__all__ = [
    "CEConfig",
    "ConditionalIndexEstimate",
    "ExperimentConfig",
    "FailureProblem",
    "GaussianLinearOptimalDensity",
    "GaussianLinearSpec",
    "GaussianMixtureModel",
    "GaussianModel",
    "RunRecord",
    "ShapleyReport",
    "StandardizationMap",
    "TransformedInputModel",
    "WeightedFailureSample",
    "allocate_budget",
    "cantilever_beam",
    "cross_entropy_fit",
    "fire_spread",
    "fit_standardization",
    "gaussian_linear",
    "gl_failure_probability",
    "gl_target_closed_sobol",
    "gl_target_ev",
    "gl_target_shapley",
    "indicator_variance",
    "is_failure_probability",
    "is_pt_squared_unbiased",
    "mc_failure_probability",
    "model_from_config",
    "permutation_aggregate",
    "run",
    "subset_aggregate",
    "summarize",
    "t_ev_dmc_given_model",
    "t_ev_dmc_is_given_model",
    "t_ev_dmc_is_knn",
    "t_ev_dmc_knn",
    "t_ve_pf_given_model",
    "t_ve_pf_is_given_model",
    "t_ve_pf_is_knn",
    "t_ve_pf_knn",
    "variance_of_mean_unbiased",
]
