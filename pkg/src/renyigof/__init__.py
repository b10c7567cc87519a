"""Nearest-neighbour Renyi entropy estimation and maximum-entropy
goodness-of-fit tests for multivariate Student and Pearson type II
distributions, with a Monte Carlo harness for critical values, power
and convergence rates."""

from ._version import __version__
from .distributions import (
    ConditionCheck,
    DistributionSpec,
    Family,
    MaxEntropyResult,
    SpdMatrix,
    check_estimator_conditions,
    critical_moment,
    density,
    gaussian,
    gaussian_shannon_entropy,
    log_density,
    max_renyi_entropy,
    pearson2,
    pearson2_renyi_constant,
    renyi_entropy_closed_form,
    student,
    student_renyi_constant,
)
from .errors import (
    DomainError,
    DuplicatePointsError,
    ExperimentError,
    NotPositiveDefiniteError,
)
from .gof import GofStatistic, pearson_statistic, sample_covariance, student_statistic
from .knn import (
    EntropyEstimate,
    KnnDistances,
    g_estimate,
    knn_distances,
    renyi_estimate,
    shannon_estimate,
)
from .mc import (
    ExperimentConfig,
    McResult,
    RateFit,
    empirical_quantile,
    estimate_power,
    fit_convergence_rate,
    histogram_bins,
    run_experiment,
    summarize,
)
from .sampler import RngStream, Sample, sample, sample_uniform_sphere
from .special import digamma, ln_beta, ln_gamma, unit_ball_volume

__all__ = [
    "__version__",
    "ConditionCheck",
    "DistributionSpec",
    "Family",
    "MaxEntropyResult",
    "SpdMatrix",
    "check_estimator_conditions",
    "critical_moment",
    "density",
    "gaussian",
    "gaussian_shannon_entropy",
    "log_density",
    "max_renyi_entropy",
    "pearson2",
    "pearson2_renyi_constant",
    "renyi_entropy_closed_form",
    "student",
    "student_renyi_constant",
    "DomainError",
    "DuplicatePointsError",
    "ExperimentError",
    "NotPositiveDefiniteError",
    "GofStatistic",
    "pearson_statistic",
    "sample_covariance",
    "student_statistic",
    "EntropyEstimate",
    "KnnDistances",
    "g_estimate",
    "knn_distances",
    "renyi_estimate",
    "shannon_estimate",
    "ExperimentConfig",
    "McResult",
    "RateFit",
    "empirical_quantile",
    "estimate_power",
    "fit_convergence_rate",
    "histogram_bins",
    "run_experiment",
    "summarize",
    "RngStream",
    "Sample",
    "sample",
    "sample_uniform_sphere",
    "digamma",
    "ln_beta",
    "ln_gamma",
    "unit_ball_volume",
]
