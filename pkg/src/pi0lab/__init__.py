"""Estimation of the proportion of true null hypotheses from p-values.

The observed p-values are modelled as a mixture of a uniform null component
and an alternative whose density decreases to zero at the right end of the
unit interval.  The package provides histogram and cross-validation
estimators of the null proportion, shape-constrained and tail-based
baselines, the semiparametric variance bound for the problem, and a seeded
simulation harness with CSV and figure output.
"""

from .model import (
    MixtureParams,
    PValueSample,
    alt_cdf,
    alt_density,
    class_membership_check,
    l2_norm_squared,
    mixture_cdf,
    mixture_density,
    sample,
)
from .partitions import (
    HistogramCounts,
    MomentSet,
    Partition,
    cell_counts,
    enumerate_collection,
    is_subdivision,
    moments_from_density,
    moments_from_params,
    moments_from_probs,
    projection_bias,
    regular,
    technical_condition,
    window,
)
from .histogram import (
    EstimateResult,
    StepDensity,
    histogram_density,
    theta_hat_min,
)
from .crossval import (
    RiskEstimate,
    SelectorTrace,
    analytic_mse,
    lpo_risk,
    select_p,
    theta_hat_cr,
)
from .shape import (
    GrenanderFit,
    grenander,
    theta_hat_langaas,
    theta_hat_oracle,
    theta_hat_storey,
)
from .efficiency import (
    DeltaEstimate,
    EfficiencyQuantities,
    delta_hat,
    efficiency_quantities,
    efficient_influence,
    efficient_information,
    efficient_score,
    one_step,
    optimal_variance,
)
from .simulate import (
    DESK_GRID,
    ESTIMATORS,
    MODELS,
    PAPER_GRID,
    ModelSpec,
    SimConfig,
    SimReport,
    derive_seed,
    histogram_ise_check,
    loglog_fit,
    lpo_variance_check,
    run_simulation,
)
from .report import (
    render_density_figure,
    render_mse_figure,
    summary_text,
    to_csv,
)

__version__ = "0.1.0"

__all__ = [
    "MixtureParams", "PValueSample", "alt_cdf", "alt_density",
    "class_membership_check", "l2_norm_squared", "mixture_cdf",
    "mixture_density", "sample",
    "HistogramCounts", "MomentSet", "Partition", "cell_counts",
    "enumerate_collection", "is_subdivision", "moments_from_density",
    "moments_from_params", "moments_from_probs", "projection_bias",
    "regular", "technical_condition", "window",
    "EstimateResult", "StepDensity", "histogram_density", "theta_hat_min",
    "RiskEstimate", "SelectorTrace", "analytic_mse", "lpo_risk",
    "select_p", "theta_hat_cr",
    "GrenanderFit", "grenander", "theta_hat_langaas", "theta_hat_oracle",
    "theta_hat_storey",
    "DeltaEstimate", "EfficiencyQuantities", "delta_hat",
    "efficiency_quantities", "efficient_influence", "efficient_information",
    "efficient_score", "one_step", "optimal_variance",
    "DESK_GRID", "ESTIMATORS", "MODELS", "PAPER_GRID", "ModelSpec",
    "SimConfig", "SimReport", "derive_seed", "histogram_ise_check",
    "loglog_fit", "lpo_variance_check", "run_simulation",
    "render_density_figure", "render_mse_figure", "summary_text", "to_csv",
    "__version__",
]
