"""Monte Carlo experiment engine.

Draws M independent samples of each configured size from the true
distribution, evaluates the configured goodness-of-fit statistic
against the null parameter on each, and summarises the replicate
values: means and standard errors, empirical critical values, power
estimates against a critical value, and log-log convergence-rate fits.

Each replicate owns the stream keyed by (master_seed, sample size,
replicate index), so results are independent of worker count and
execution order, and extending the sample-size grid leaves existing
replicates untouched.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._version import __version__
from .distributions import (
    DistributionSpec,
    Family,
    SpdMatrix,
    gaussian,
    max_renyi_entropy,
    pearson2,
    student,
)
from .errors import (
    DomainError,
    DuplicatePointsError,
    ExperimentError,
    NotPositiveDefiniteError,
)
from .gof import pearson_statistic, sample_covariance, student_statistic
from .knn import renyi_estimate, shannon_estimate
from .sampler import RngStream, sample

__all__ = [
    "ExperimentConfig",
    "NResult",
    "McResult",
    "run_experiment",
    "empirical_quantile",
    "estimate_power",
    "fit_convergence_rate",
    "RateFit",
    "summarize",
    "histogram_bins",
    "result_to_json",
    "write_summary_csv",
    "write_histogram_csv",
    "read_critical_values",
    "SUMMARY_COLUMNS",
]

CONFIG_SCHEMA_VERSION = 1

# fixed column layout of the summary table
SUMMARY_COLUMNS = (
    "m",
    "true_param",
    "null_param",
    "N",
    "k",
    "mean",
    "stderr",
    "q05",
    "q01",
    "q10",
    "power_at_005",
    "rate_b",
)

_QUANTILE_SCHEME = "order statistics, linear interpolation at h = (M-1)(1-alpha) + 1"


def _param_str(p: float) -> str:
    return "inf" if math.isinf(p) else repr(float(p))


def _param_from(v) -> float:
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "infinity"):
            return math.inf
        return float(v)
    return float(v)


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for one Monte Carlo experiment.

    `family` selects the test statistic (and the sampled family);
    `true_param` is the tail parameter of the sampled distribution and
    `null_param` the one the statistic tests against.  Infinite
    parameters mean Gaussian on either side.  Samples are drawn from
    the standardised distribution (location 0, scale identity).

    `covariance_mode` controls how the maximum-entropy side of the
    statistic is fed.  "same" (the default, and the statistic's actual
    definition) estimates the covariance from the sample under test.
    "fresh" estimates it from an independent draw of the same size,
    which removes the variance cancellation between the entropy
    estimate and the covariance term; published critical-value tables
    produced by harnesses that draw the constraint sample separately
    are only reproducible in this mode.
    """

    family: Family
    true_param: float
    null_param: float
    dim: int
    n_grid: tuple[int, ...]
    k: int
    replicates: int
    alpha_levels: tuple[float, ...] = (0.01, 0.05, 0.10)
    master_seed: int = 0
    max_failure_rate: float = 0.01
    include_replicates: bool = False
    covariance_mode: str = "same"

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "alpha_levels", tuple(float(a) for a in self.alpha_levels))
        violations = self.validate()
        if violations:
            raise ExperimentError("invalid experiment config: " + "; ".join(violations))

    def validate(self) -> list[str]:
        """Return every constraint violation (empty when valid)."""
        problems: list[str] = []
        if self.family not in (Family.STUDENT, Family.PEARSON2):
            problems.append(f"family must be student or pearson2, got {self.family}")
        if self.dim < 1:
            problems.append(f"dim must be >= 1, got {self.dim}")
        if self.replicates < 2:
            problems.append(f"replicates must be >= 2, got {self.replicates}")
        if self.k < 1:
            problems.append(f"k must be >= 1, got {self.k}")
        if not self.n_grid:
            problems.append("n_grid must be non-empty")
        for n in self.n_grid:
            if n < self.dim + 1:
                problems.append(f"sample size {n} below m+1 = {self.dim + 1}")
            if n < self.k + 1:
                problems.append(f"sample size {n} too small for k = {self.k}")
        for a in self.alpha_levels:
            if not 0.0 < a < 1.0:
                problems.append(f"alpha level {a} outside (0, 1)")
        if not 0.0 <= self.max_failure_rate < 1.0:
            problems.append(f"max_failure_rate {self.max_failure_rate} outside [0, 1)")
        if self.covariance_mode not in ("same", "fresh"):
            problems.append(
                f"covariance_mode must be 'same' or 'fresh', got {self.covariance_mode!r}"
            )
        if self.family is Family.STUDENT:
            for name, p in (("true_param", self.true_param), ("null_param", self.null_param)):
                if not (math.isinf(p) or p > 2):
                    problems.append(f"{name} must be > 2 or inf for the Student family, got {p}")
        elif self.family is Family.PEARSON2:
            for name, p in (("true_param", self.true_param), ("null_param", self.null_param)):
                if not (math.isinf(p) or p > 0):
                    problems.append(f"{name} must be > 0 or inf for the Pearson II family, got {p}")
            if not math.isinf(self.null_param) and self.k * self.null_param <= 1.0:
                problems.append(
                    f"estimator requires k > 1/eta0: k = {self.k}, eta0 = {self.null_param}"
                )
        return problems

    def to_dict(self) -> dict:
        return {
            "schema_version": CONFIG_SCHEMA_VERSION,
            "family": self.family.value,
            "true_param": _param_str(self.true_param),
            "null_param": _param_str(self.null_param),
            "dim": self.dim,
            "n_grid": list(self.n_grid),
            "k": self.k,
            "replicates": self.replicates,
            "alpha_levels": list(self.alpha_levels),
            "master_seed": self.master_seed,
            "max_failure_rate": self.max_failure_rate,
            "include_replicates": self.include_replicates,
            "covariance_mode": self.covariance_mode,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ExperimentError("config must be a JSON object")
        version = data.get("schema_version")
        if version != CONFIG_SCHEMA_VERSION:
            raise ExperimentError(
                f"unsupported config schema_version {version!r}, expected {CONFIG_SCHEMA_VERSION}"
            )
        required = ["family", "true_param", "null_param", "dim", "n_grid", "k", "replicates"]
        missing = [key for key in required if key not in data]
        if missing:
            raise ExperimentError("config missing required fields: " + ", ".join(missing))
        try:
            family = Family(data["family"])
        except ValueError:
            raise ExperimentError(f"unknown family {data['family']!r}") from None
        return cls(
            family=family,
            true_param=_param_from(data["true_param"]),
            null_param=_param_from(data["null_param"]),
            dim=int(data["dim"]),
            n_grid=tuple(int(n) for n in data["n_grid"]),
            k=int(data["k"]),
            replicates=int(data["replicates"]),
            alpha_levels=tuple(float(a) for a in data.get("alpha_levels", (0.01, 0.05, 0.10))),
            master_seed=int(data.get("master_seed", 0)),
            max_failure_rate=float(data.get("max_failure_rate", 0.01)),
            include_replicates=bool(data.get("include_replicates", False)),
            covariance_mode=str(data.get("covariance_mode", "same")),
        )

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:12]


@dataclass(frozen=True)
class NResult:
    """Replicate statistic values at one sample size (None marks a
    replicate whose estimator preconditions failed)."""

    n: int
    values: tuple
    failures: tuple

    @property
    def valid_values(self) -> np.ndarray:
        return np.asarray([v for v in self.values if v is not None], dtype=float)


@dataclass(frozen=True)
class McResult:
    """Full outcome of a Monte Carlo experiment."""

    config: ExperimentConfig
    per_n: tuple[NResult, ...]

    def values_at(self, n: int) -> np.ndarray:
        for entry in self.per_n:
            if entry.n == n:
                return entry.valid_values
        raise KeyError(f"no results for sample size {n}")

    def mean_curve(self) -> list[tuple[int, float]]:
        """(N, replicate mean) pairs in grid order."""
        return [(e.n, summarize(e.valid_values)[0]) for e in self.per_n]


def _true_spec(config: ExperimentConfig) -> DistributionSpec:
    loc = np.zeros(config.dim)
    scale = SpdMatrix.identity(config.dim)
    if math.isinf(config.true_param):
        return gaussian(loc, scale)
    if config.family is Family.STUDENT:
        return student(loc, scale, config.true_param)
    return pearson2(loc, scale, config.true_param)


def _stream_id(n: int, j: int) -> int:
    # keyed by the sample size value, not its grid index, so extending
    # the grid never perturbs existing replicate streams
    return ((n & 0xFFFFFFFF) << 32) | (j & 0xFFFFFFFF)


# high bit marks the auxiliary stream used by covariance_mode="fresh"
_FRESH_COV_BIT = 1 << 63


def _replicate_value(config: ExperimentConfig, n: int, j: int) -> float:
    stream = RngStream(config.master_seed, _stream_id(n, j))
    s = sample(_true_spec(config), n, stream)
    if config.covariance_mode == "fresh":
        cov_stream = RngStream(config.master_seed, _stream_id(n, j) | _FRESH_COV_BIT)
        s_cov = sample(_true_spec(config), n, cov_stream)
        return _fresh_cov_statistic(config, s, s_cov)
    if config.family is Family.STUDENT:
        stat = student_statistic(s, config.null_param, config.k)
    else:
        stat = pearson_statistic(s, config.null_param, config.k)
    return stat.value


def _fresh_cov_statistic(config: ExperimentConfig, s, s_cov) -> float:
    _, cov = sample_covariance(s_cov)
    h_max, q, _ = max_renyi_entropy(config.family, cov, config.null_param)
    if q == 1.0:
        est = shannon_estimate(s, config.k)
    else:
        est = renyi_estimate(s, config.k, q)
    return h_max - est.value


def _run_block(args) -> list:
    config, n, j_start, j_stop = args
    out = []
    for j in range(j_start, j_stop):
        try:
            out.append((j, _replicate_value(config, n, j), None))
        except (DomainError, DuplicatePointsError, NotPositiveDefiniteError) as exc:
            out.append((j, None, f"{type(exc).__name__}: {exc}"))
    return out


def run_experiment(config: ExperimentConfig, workers: int | None = 1) -> McResult:
    """Run every replicate of the experiment, optionally in parallel.

    `workers=None` uses all available CPUs.  Results are bit-identical
    for any worker count.  Raises ExperimentError if the fraction of
    failed replicates at any sample size exceeds
    config.max_failure_rate.
    """
    if workers is None:
        workers = os.cpu_count() or 1
    m_rep = config.replicates
    block = max(1, -(-m_rep // max(1, 4 * workers)))
    tasks = []
    for n in config.n_grid:
        for j0 in range(0, m_rep, block):
            tasks.append((config, n, j0, min(j0 + block, m_rep)))

    if workers <= 1:
        outputs = [_run_block(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_block, tasks))

    collected: dict[int, list] = {n: [None] * m_rep for n in config.n_grid}
    for task, out in zip(tasks, outputs):
        n = task[1]
        for j, value, err in out:
            collected[n][j] = (value, err)

    per_n = []
    for n in config.n_grid:
        values = tuple(v for v, _ in collected[n])
        failures = tuple((j, err) for j, (_, err) in enumerate(collected[n]) if err is not None)
        if len(failures) > config.max_failure_rate * m_rep:
            raise ExperimentError(
                f"{len(failures)}/{m_rep} replicates failed at N={n}; "
                f"first failure: {failures[0][1]}"
            )
        per_n.append(NResult(n=n, values=values, failures=failures))
    return McResult(config=config, per_n=tuple(per_n))


def empirical_quantile(values: Sequence[float], alpha: float) -> float:
    """Upper-tail critical value: the empirical (1-alpha) quantile.

    Uses order statistics with linear interpolation at index
    h = (M-1)(1-alpha) + 1 (one-based).
    """
    vals = np.sort(np.asarray(values, dtype=float))
    m_rep = vals.size
    if m_rep < 2:
        raise DomainError(f"need at least 2 values, got {m_rep}")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    h = (m_rep - 1) * (1.0 - alpha) + 1.0
    j = int(math.floor(h))
    if j >= m_rep:
        return float(vals[-1])
    return float(vals[j - 1] + (h - j) * (vals[j] - vals[j - 1]))


def estimate_power(values: Sequence[float], critical_value: float) -> float:
    """Proportion of values strictly exceeding the critical value."""
    vals = np.asarray(values, dtype=float)
    if vals.size < 1:
        raise DomainError("need at least 1 value")
    return float(np.mean(vals > critical_value))


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log(mean) = log_a + b log(N)."""

    log_a: float
    b: float
    r_squared: float
    excluded: tuple[tuple[int, float], ...] = ()


def fit_convergence_rate(pairs: Iterable[tuple[int, float]]) -> RateFit:
    """Convergence-rate estimate from (N, replicate mean) pairs.

    Pairs with non-positive mean are excluded (and reported in the
    result) rather than folded in via absolute values: sign flips occur
    where the statistic has essentially converged and carry no rate
    information.  At least 3 usable pairs are required.
    """
    pairs = list(pairs)
    usable = [(n, w) for n, w in pairs if w > 0]
    excluded = tuple((n, w) for n, w in pairs if not w > 0)
    if len(usable) < 3:
        raise DomainError(
            f"need at least 3 pairs with positive mean, got {len(usable)} "
            f"({len(excluded)} excluded)"
        )
    x = np.log([float(n) for n, _ in usable])
    y = np.log([w for _, w in usable])
    x_bar = math.fsum(x) / x.size
    y_bar = math.fsum(y) / y.size
    sxx = math.fsum((x - x_bar) * (x - x_bar))
    sxy = math.fsum((x - x_bar) * (y - y_bar))
    b = sxy / sxx
    log_a = y_bar - b * x_bar
    residual = y - (log_a + b * x)
    ss_res = math.fsum(residual * residual)
    ss_tot = math.fsum((y - y_bar) * (y - y_bar))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return RateFit(log_a=log_a, b=b, r_squared=r_squared, excluded=excluded)


def summarize(values: Sequence[float]) -> tuple[float, float]:
    """Mean and standard error s/sqrt(M) with the unbiased divisor."""
    vals = np.asarray(values, dtype=float)
    m_rep = vals.size
    if m_rep < 2:
        raise DomainError(f"need at least 2 values, got {m_rep}")
    mean = math.fsum(vals) / m_rep
    var = math.fsum((vals - mean) * (vals - mean)) / (m_rep - 1)
    return mean, math.sqrt(var / m_rep)


def histogram_bins(values: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """(edges, counts) with Freedman-Diaconis bin width."""
    vals = np.asarray(values, dtype=float)
    if vals.size < 2:
        raise DomainError(f"need at least 2 values, got {vals.size}")
    counts, edges = np.histogram(vals, bins="fd")
    return edges, counts


def _header_lines(config: ExperimentConfig) -> list[str]:
    return [
        f"# renyigof {__version__}",
        f"# config {config.canonical_json()}",
        f"# config_hash {config.config_hash()}",
        f"# master_seed {config.master_seed}",
        f"# quantile_scheme {_QUANTILE_SCHEME}",
    ]


def result_to_json(result: McResult, include_replicates: bool | None = None) -> str:
    """Serialise a result deterministically.

    Replicate arrays are included when requested (default: the config's
    include_replicates flag); summaries are always present.
    """
    if include_replicates is None:
        include_replicates = result.config.include_replicates
    rate_b = _rate_or_none(result)
    per_n = []
    for entry in result.per_n:
        vals = entry.valid_values
        mean, stderr = summarize(vals)
        quantiles = {
            repr(float(a)): empirical_quantile(vals, a)
            for a in result.config.alpha_levels
        }
        item = {
            "n": entry.n,
            "replicates": len(entry.values),
            "failed": len(entry.failures),
            "mean": mean,
            "std_error": stderr,
            "quantiles": quantiles,
        }
        if entry.failures:
            item["failures"] = [{"replicate": j, "error": msg} for j, msg in entry.failures]
        if include_replicates:
            item["values"] = list(entry.values)
        per_n.append(item)
    doc = {
        "tool": "renyigof",
        "version": __version__,
        "config": result.config.to_dict(),
        "config_hash": result.config.config_hash(),
        "quantile_scheme": _QUANTILE_SCHEME,
        "rate_b": rate_b,
        "per_n": per_n,
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def _format_float(x: float) -> str:
    return repr(float(x))


def _rate_or_none(result: McResult) -> float | None:
    try:
        return fit_convergence_rate(result.mean_curve()).b
    except DomainError:
        return None


def write_summary_csv(result: McResult, path, critical_by_n: dict[int, float] | None = None) -> None:
    """Write the per-N summary table.

    `power_at_005` is the rejection rate against `critical_by_n` when a
    reference (null-run) critical table is supplied, otherwise against
    this run's own 5% critical value (a self-consistency check that
    sits near 0.05 by construction).
    """
    config = result.config
    rate_b = _rate_or_none(result)
    lines = _header_lines(config)
    lines.append(",".join(SUMMARY_COLUMNS))
    for entry in result.per_n:
        vals = entry.valid_values
        mean, stderr = summarize(vals)
        q05 = empirical_quantile(vals, 0.05)
        q01 = empirical_quantile(vals, 0.01)
        q10 = empirical_quantile(vals, 0.10)
        if critical_by_n is not None:
            crit = critical_by_n.get(entry.n)
            power = "" if crit is None else _format_float(estimate_power(vals, crit))
        else:
            power = _format_float(estimate_power(vals, q05))
        row = [
            str(config.dim),
            _param_str(config.true_param),
            _param_str(config.null_param),
            str(entry.n),
            str(config.k),
            _format_float(mean),
            _format_float(stderr),
            _format_float(q05),
            _format_float(q01),
            _format_float(q10),
            power,
            "" if rate_b is None else _format_float(rate_b),
        ]
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_histogram_csv(result: McResult, n: int, path) -> None:
    """Write Freedman-Diaconis histogram bins of the replicate values at N=n."""
    edges, counts = histogram_bins(result.values_at(n))
    lines = _header_lines(result.config)
    lines.append(f"# sample_size {n}")
    lines.append("bin_left,bin_right,count")
    for left, right, count in zip(edges[:-1], edges[1:], counts):
        lines.append(f"{_format_float(left)},{_format_float(right)},{int(count)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_critical_values(path, alpha: float = 0.05) -> dict[int, float]:
    """Read {N: critical value} from a summary CSV written by
    :func:`write_summary_csv`, at one of the three tabulated levels."""
    column = {0.05: "q05", 0.01: "q01", 0.10: "q10"}.get(alpha)
    if column is None:
        raise DomainError(f"critical tables carry alpha in (0.01, 0.05, 0.10), got {alpha}")
    table: dict[int, float] = {}
    header: list[str] | None = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if header is None:
                header = parts
                if column not in header or "N" not in header:
                    raise DomainError(f"{path}: not a summary table (missing N/{column})")
                continue
            row = dict(zip(header, parts))
            table[int(row["N"])] = float(row[column])
    if header is None:
        raise DomainError(f"{path}: empty critical table")
    return table
