"""Maximum-entropy goodness-of-fit statistics.

A sample is tested against the simple null hypothesis that it came from
a Student (resp. Pearson II) distribution with a given tail parameter.
The statistic is the gap between the maximum Renyi entropy compatible
with the sample covariance and the nearest-neighbour entropy estimate,
evaluated at the order q induced by the null parameter.  Under the null
the gap tends to zero in probability; under an alternative it tends to
a strictly positive constant, so large values reject (upper-tail test).

The statistic can be negative in finite samples (the estimate may
overshoot the maximum); it is returned signed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (
    Family,
    SpdMatrix,
    check_estimator_conditions,
    max_renyi_entropy,
    pearson2,
    student,
)
from .errors import DomainError
from .knn import renyi_estimate, shannon_estimate
from .sampler import Sample

__all__ = ["GofStatistic", "sample_covariance", "student_statistic", "pearson_statistic"]


@dataclass(frozen=True)
class GofStatistic:
    """Value of a maximum-entropy test statistic and its settings.

    `family` is GAUSSIAN when the null parameter is infinite (both
    tests then coincide in their common Gaussian limit).  `l2_ok`
    records whether the L2 moment condition for estimator convergence
    holds under the null; the boundary case q = 1/2 computes anyway and
    is merely flagged.
    """

    value: float
    family: Family
    null_param: float
    q: float
    k: int
    n: int
    dim: int
    l2_ok: bool


def sample_covariance(sample: Sample) -> tuple[np.ndarray, SpdMatrix]:
    """Sample mean and unbiased (divisor N-1) covariance matrix.

    Requires N >= m+1 so the covariance is almost surely positive
    definite; a degenerate sample raises NotPositiveDefiniteError from
    the factorisation.
    """
    n, m = sample.n, sample.dim
    if n < m + 1:
        raise DomainError(f"need at least m+1 = {m + 1} points, got {n}")
    mean = sample.points.mean(axis=0)
    dev = sample.points - mean
    cov = dev.T @ dev / (n - 1)
    return mean, SpdMatrix(cov)


def student_statistic(sample: Sample, nu0: float, k: int) -> GofStatistic:
    """Test statistic for the null "sample ~ Student with parameter nu0".

    For finite nu0 > 2 this is H_q^max - H_hat at q = 1 - 2/(nu0+m) with
    the maximum taken at covariance constraint C = sample covariance;
    nu0 = inf tests Gaussianity through the Shannon estimator against
    the Gaussian entropy maximum.
    """
    if not (math.isinf(nu0) or nu0 > 2):
        raise DomainError(f"null parameter nu0 must be > 2 or inf, got {nu0}")
    _, cov = sample_covariance(sample)
    h_max, q, _ = max_renyi_entropy(Family.STUDENT, cov, nu0)
    if math.isinf(nu0):
        est = shannon_estimate(sample, k)
        family = Family.GAUSSIAN
    else:
        est = renyi_estimate(sample, k, q)
        family = Family.STUDENT
    m = sample.dim
    null_spec = student(np.zeros(m), SpdMatrix.identity(m), nu0)
    l2_ok = bool(check_estimator_conditions(null_spec, q, "L2"))
    return GofStatistic(h_max - est.value, family, float(nu0), q, int(k), sample.n, m, l2_ok)


def pearson_statistic(sample: Sample, eta0: float, k: int) -> GofStatistic:
    """Test statistic for the null "sample ~ Pearson II with parameter eta0".

    For finite eta0 > 0 this is H_q^max - H_hat at q = 1 + 1/eta0, which
    requires k > 1/eta0; eta0 = inf is the same Gaussian branch as
    student_statistic(..., inf, ...).
    """
    if not (math.isinf(eta0) or eta0 > 0):
        raise DomainError(f"null parameter eta0 must be > 0 or inf, got {eta0}")
    if not math.isinf(eta0) and not k > 1.0 / eta0:
        raise DomainError(f"estimator requires k > 1/eta0 = {1.0 / eta0}, got k = {k}")
    _, cov = sample_covariance(sample)
    h_max, q, _ = max_renyi_entropy(Family.PEARSON2, cov, eta0)
    if math.isinf(eta0):
        est = shannon_estimate(sample, k)
        family = Family.GAUSSIAN
    else:
        est = renyi_estimate(sample, k, q)
        family = Family.PEARSON2
    m = sample.dim
    null_spec = pearson2(np.zeros(m), SpdMatrix.identity(m), eta0)
    l2_ok = bool(check_estimator_conditions(null_spec, q, "L2"))
    return GofStatistic(h_max - est.value, family, float(eta0), q, int(k), sample.n, m, l2_ok)
