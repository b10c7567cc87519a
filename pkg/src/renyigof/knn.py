"""Exact k-nearest-neighbour distances and entropy estimators.

Implements the Renyi entropy estimator of Leonenko, Pronzato and Savani
(2008) and its Shannon (q -> 1) limit, the Kozachenko-Leonenko
estimator.  Distances come from one of two interchangeable kernels: a
brute-force O(N^2 m) scan, which doubles as the test oracle, and a
kd-tree used for large samples.  Both produce bit-identical distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError, DuplicatePointsError
from .sampler import Sample
from .special import digamma, ln_gamma, unit_ball_volume

__all__ = [
    "KnnDistances",
    "EntropyEstimate",
    "knn_distances",
    "g_estimate",
    "renyi_estimate",
    "shannon_estimate",
    "TREE_THRESHOLD",
]

# brute force below this sample size, kd-tree above
TREE_THRESHOLD = 512

_BRUTE_BLOCK = 256


@dataclass(frozen=True, eq=False)
class KnnDistances:
    """Matrix rho of exact neighbour distances.

    rho[i, j-1] is the Euclidean distance from point i to its j-th
    nearest neighbour among the other N-1 points, so rows are
    non-decreasing left to right.
    """

    rho: np.ndarray

    @property
    def n(self) -> int:
        return self.rho.shape[0]

    @property
    def k_max(self) -> int:
        return self.rho.shape[1]


@dataclass(frozen=True)
class EntropyEstimate:
    """An entropy estimate in nats, tagged with its estimator settings."""

    value: float
    q: float
    k: int
    n: int
    dim: int


def knn_distances(sample: Sample, k_max: int, method: str = "auto") -> KnnDistances:
    """Exact k-nearest-neighbour distances for every sample point.

    Parameters
    ----------
    sample : Sample
        N points in R^m, all distinct.
    k_max : int
        Number of neighbour distances per point, 1 <= k_max <= N-1.
    method : {"auto", "brute", "tree"}
        Kernel selection; "auto" uses the tree for N > TREE_THRESHOLD.

    Raises
    ------
    DuplicatePointsError
        If two points coincide (zero distance), with the colliding
        index pairs.
    """
    pts = sample.points
    n = sample.n
    if k_max < 1 or k_max > n - 1:
        raise DomainError(f"k_max must satisfy 1 <= k_max <= N-1 = {n - 1}, got {k_max}")
    if method == "auto":
        method = "tree" if n > TREE_THRESHOLD else "brute"
    if method == "brute":
        rho = _brute_kernel(pts, k_max)
    elif method == "tree":
        rho = _tree_kernel(pts, k_max)
    else:
        raise DomainError(f"unknown method {method!r}")
    return KnnDistances(rho)


def _pairwise_sq(block: np.ndarray, pts: np.ndarray) -> np.ndarray:
    # accumulate coordinate by coordinate: matches the kd-tree kernel's
    # summation order exactly, keeping the two kernels bit-identical
    d2 = np.zeros((block.shape[0], pts.shape[0]))
    for j in range(pts.shape[1]):
        diff = block[:, j, None] - pts[None, :, j]
        d2 += diff * diff
    return d2


def _brute_kernel(pts: np.ndarray, k_max: int) -> np.ndarray:
    n = pts.shape[0]
    rho = np.empty((n, k_max))
    duplicates = []
    for start in range(0, n, _BRUTE_BLOCK):
        stop = min(start + _BRUTE_BLOCK, n)
        d2 = _pairwise_sq(pts[start:stop], pts)
        rows = np.arange(start, stop)
        d2[rows - start, rows] = np.inf
        zero_i, zero_j = np.nonzero(d2 == 0.0)
        for i, j in zip(zero_i, zero_j):
            gi = int(i + start)
            if gi < j:
                duplicates.append((gi, int(j)))
        part = np.partition(d2, k_max - 1, axis=1)[:, :k_max]
        part.sort(axis=1)
        rho[start:stop] = np.sqrt(part)
    if duplicates:
        raise DuplicatePointsError(duplicates)
    return rho


def _tree_kernel(pts: np.ndarray, k_max: int) -> np.ndarray:
    tree = cKDTree(pts)
    dist, idx = tree.query(pts, k=k_max + 1)
    # column 0 is the query point itself; a second zero means a duplicate
    zero = dist[:, 1] == 0.0
    if zero.any():
        duplicates = []
        for i in np.nonzero(zero)[0]:
            j = int(idx[i, 1]) if int(idx[i, 0]) == int(i) else int(idx[i, 0])
            if int(i) < j:
                duplicates.append((int(i), j))
        raise DuplicatePointsError(sorted(set(duplicates)))
    return dist[:, 1:]


def _log_g(dists: KnnDistances, dim: int, k: int, q: float) -> float:
    if q == 1.0:
        raise DomainError("q = 1 is the Shannon case; use shannon_estimate")
    if not q > 0:
        raise DomainError(f"order q must be positive, got {q}")
    if k < 1 or k > dists.k_max:
        raise DomainError(f"k must satisfy 1 <= k <= k_max = {dists.k_max}, got {k}")
    if not k > q - 1.0:
        raise DomainError(f"estimator requires k > q - 1, got k = {k}, q = {q}")
    n = dists.n
    rho = dists.rho[:, k - 1]
    if q > 1.0 and (rho == 0.0).any():
        raise DomainError("zero neighbour distance with q > 1 diverges")
    # zeta_i = (N-1) C_k V_m rho_i^m;  (1-q) log C_k = lnG(k) - lnG(k+1-q)
    log_const = (1.0 - q) * (math.log(n - 1) + math.log(unit_ball_volume(dim)))
    log_const += ln_gamma(k) - ln_gamma(k + 1.0 - q)
    s = (1.0 - q) * dim * np.log(rho) + log_const
    # compensated log-sum-exp keeps the mean exact under permutation
    s_max = float(s.max())
    return s_max + math.log(math.fsum(np.exp(s - s_max))) - math.log(n)


def g_estimate(dists: KnnDistances, dim: int, k: int, q: float) -> float:
    """Estimate of the integral of f^q from neighbour distances.

    Computes the sample mean of zeta_i^{1-q} where
    zeta_i = (N-1) C_k V_m rho_{k,i}^m and
    C_k = [Gamma(k)/Gamma(k+1-q)]^{1/(1-q)}, in log space.
    Requires k > q - 1.
    """
    return math.exp(_log_g(dists, dim, k, q))


def renyi_estimate(sample: Sample, k: int, q: float, method: str = "auto") -> EntropyEstimate:
    """Nearest-neighbour Renyi entropy estimate log(G)/(1-q) at order q != 1."""
    dists = knn_distances(sample, k, method=method)
    value = _log_g(dists, sample.dim, k, q) / (1.0 - q)
    return EntropyEstimate(value, float(q), int(k), sample.n, sample.dim)


def shannon_estimate(sample: Sample, k: int, method: str = "auto") -> EntropyEstimate:
    """Kozachenko-Leonenko Shannon entropy estimate, the q -> 1 limit of
    :func:`renyi_estimate` (where C_k -> exp(-psi(k)))."""
    dists = knn_distances(sample, k, method=method)
    n, m = sample.n, sample.dim
    rho = dists.rho[:, k - 1]
    value = (
        m * math.fsum(np.log(rho)) / n
        + math.log(unit_ball_volume(m))
        + math.log(n - 1)
        - digamma(k)
    )
    return EntropyEstimate(value, 1.0, int(k), n, m)
