"""Unified skew-normal (SUN) distribution toolkit."""
from .core import (
    ConvolutionForm,
    OrthantCondition,
    SunParams,
    affine,
    cdf,
    cgf,
    condition_orthant,
    logpdf,
    marginal,
    mode,
    pdf,
    sample,
    validate,
)
from .errors import (
    AcceptanceTooLow,
    DegenerateSample,
    DimensionMismatch,
    MaxIterations,
    NotCorrelation,
    NotCorrelationMatrix,
    NotPositiveDefinite,
    RankDeficient,
    ShapeMismatch,
    SunError,
    ToleranceNotReached,
)
from .momentset import MomentSet
from .moments import mardia, normal_moments, shift_moments, sum_moments, sun_mean, sun_moments, sun_var
from .mvn import DEFAULT_CONFIG, GaussianSpec, IntegrationConfig
from .truncmvn import TruncMoments, TruncSpec, central_moments, sample_truncated, trunc_moments

__version__ = "0.1.0"

__all__ = [
    "ConvolutionForm", "OrthantCondition", "SunParams", "affine", "cdf", "cgf", "condition_orthant",
    "logpdf", "marginal", "mode", "pdf", "sample", "validate",
    "AcceptanceTooLow", "DegenerateSample", "DimensionMismatch", "MaxIterations", "NotCorrelation",
    "NotCorrelationMatrix", "NotPositiveDefinite", "RankDeficient", "ShapeMismatch", "SunError",
    "ToleranceNotReached",
    "MomentSet", "mardia", "normal_moments", "shift_moments", "sum_moments", "sun_mean", "sun_moments", "sun_var",
    "DEFAULT_CONFIG", "GaussianSpec", "IntegrationConfig",
    "TruncMoments", "TruncSpec", "central_moments", "sample_truncated", "trunc_moments",
]
