"""Cumulative probability models for continuous outcomes.

Fits G^{-1}{P(Y <= y | Z)} = A(y) - beta'Z by nonparametric maximum
likelihood, with the transformation A estimated as a step function
jumping at the distinct outcome values, optional censoring at
prespecified bounds [L, U], and delta-method inference for coefficients,
the transformation, and conditional summaries (CDF, quantiles, mean).
"""

from ._kernels import available_backends, backend_name, use_backend
from .data import (
    CensoredDataset,
    OrdinalEncoding,
    RawSample,
    censor_transform,
    encode_ordinal,
    read_csv,
    uncensored_dataset,
    validate_bounds,
)
from .exceptions import (
    CensoredMeanError,
    CollinearityError,
    CpmError,
    DegenerateDataError,
    IngestionError,
    InvalidBoundsError,
    NonMonotoneParametersError,
    OutOfRangeError,
    SingularInformationError,
)
from .inference import (
    CdfResult,
    FunctionalContrast,
    MeanResult,
    QuantileResult,
    ahat,
    ahat_interval,
    conditional_cdf,
    conditional_mean,
    conditional_quantile,
    functional_variance,
    probability_scale_residuals,
)
from .likelihood import (
    ScoreInfo,
    SparseBlocks,
    information,
    linear_predictor,
    loglik,
    score,
    score_info,
    stationarity_residual,
)
from .links import EXTREME_VALUE, LINK_NAMES, LOGIT, PROBIT, Link, get_link
from .report import (
    ReportModel,
    build_report,
    coefficient_table,
    human_summary,
    load_report,
    report_csv,
    report_json,
)
from .simulate import (
    AHAT_AT,
    DEFAULT_BOUND_PAIRS,
    DEFAULT_GRID,
    ESTIMANDS,
    TRUTH,
    BiasCurve,
    MetricsTable,
    SimDesign,
    ahat_bias_curve,
    censor_fraction,
    generate_replicate,
    run_study,
)
from .solver import BlockFactor, CpmFit, FitOptions, fit, newton_step, starting_values

__version__ = "0.1.0"

__all__ = [
    "AHAT_AT",
    "BiasCurve",
    "BlockFactor",
    "CdfResult",
    "CensoredDataset",
    "CensoredMeanError",
    "CollinearityError",
    "CpmError",
    "CpmFit",
    "DEFAULT_BOUND_PAIRS",
    "DEFAULT_GRID",
    "DegenerateDataError",
    "ESTIMANDS",
    "EXTREME_VALUE",
    "FitOptions",
    "FunctionalContrast",
    "IngestionError",
    "InvalidBoundsError",
    "LINK_NAMES",
    "LOGIT",
    "Link",
    "MeanResult",
    "MetricsTable",
    "NonMonotoneParametersError",
    "OrdinalEncoding",
    "OutOfRangeError",
    "PROBIT",
    "QuantileResult",
    "RawSample",
    "ReportModel",
    "ScoreInfo",
    "SimDesign",
    "SingularInformationError",
    "SparseBlocks",
    "TRUTH",
    "ahat",
    "ahat_bias_curve",
    "ahat_interval",
    "available_backends",
    "backend_name",
    "build_report",
    "censor_fraction",
    "censor_transform",
    "coefficient_table",
    "conditional_cdf",
    "conditional_mean",
    "conditional_quantile",
    "encode_ordinal",
    "fit",
    "functional_variance",
    "generate_replicate",
    "get_link",
    "human_summary",
    "information",
    "linear_predictor",
    "load_report",
    "loglik",
    "newton_step",
    "probability_scale_residuals",
    "read_csv",
    "report_csv",
    "report_json",
    "run_study",
    "score",
    "score_info",
    "starting_values",
    "stationarity_residual",
    "uncensored_dataset",
    "use_backend",
    "validate_bounds",
    "__version__",
]
