"""Seeded, replayable sampling from the three elliptical families.

Streams are keyed by (seed, stream_id) through a counter-based Philox
generator, so distinct replicates of a Monte Carlo experiment can be
drawn in any order, on any number of workers, with identical results.

Student vectors use the classical normal/chi-square variance mixture
X = a + L Z sqrt(nu/W); Pearson II vectors use the stochastic
representation X = a + R L U with R^2 ~ Beta(m/2, eta+1) and U uniform
on the unit sphere (Johnson 1987).  Here L is the lower Cholesky factor
of Sigma.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .distributions import DistributionSpec, Family
from .errors import DomainError

__all__ = ["RngStream", "Sample", "sample", "sample_uniform_sphere", "write_csv", "read_csv"]


class RngStream:
    """An independent random stream identified by (seed, stream_id).

    Reconstructing a stream with the same identifiers replays the same
    byte sequence; distinct stream_ids share no state.  A stream is
    single-owner: draws advance it, so pass each consumer its own.
    """

    __slots__ = ("seed", "stream_id", "_generator")

    def __init__(self, seed: int, stream_id: int = 0) -> None:
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream_id = int(stream_id) & 0xFFFFFFFFFFFFFFFF
        self._generator = None

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            key = np.array([self.seed, self.stream_id], dtype=np.uint64)
            self._generator = np.random.Generator(np.random.Philox(key=key))
        return self._generator

    def __repr__(self) -> str:  # pragma: no cover
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


@dataclass(frozen=True, eq=False)
class Sample:
    """An N x m matrix of observation points."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise DomainError(f"sample points must be an (n, m) matrix, got ndim={pts.ndim}")
        if pts.shape[0] < 1 or pts.shape[1] < 1:
            raise DomainError(f"sample must be non-empty, got shape {pts.shape}")
        if not np.isfinite(pts).all():
            raise DomainError("sample points must be finite")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def sample_uniform_sphere(m: int, rng: RngStream) -> np.ndarray:
    """One point uniform on the surface of the unit sphere in R^m."""
    if m < 1:
        raise DomainError(f"dimension must be >= 1, got {m}")
    return _sphere_block(m, 1, rng.generator)[0]


def _sphere_block(m: int, n: int, gen: np.random.Generator) -> np.ndarray:
    u = gen.standard_normal((n, m))
    norms = np.linalg.norm(u, axis=1)
    while (norms == 0.0).any():  # pragma: no cover - probability zero
        bad = norms == 0.0
        u[bad] = gen.standard_normal((int(bad.sum()), m))
        norms = np.linalg.norm(u, axis=1)
    return u / norms[:, None]


def sample(spec: DistributionSpec, n: int, rng: RngStream) -> Sample:
    """Draw n independent points from `spec`.

    The result is a pure function of (spec, n, seed, stream_id) when the
    stream is freshly constructed.
    """
    if n < 1:
        raise DomainError(f"sample size must be >= 1, got {n}")
    gen = rng.generator
    m = spec.dim
    chol_t = spec.scale.chol.T

    if spec.family is Family.GAUSSIAN:
        z = gen.standard_normal((n, m))
        core = z
    elif spec.family is Family.STUDENT:
        nu = spec.param
        z = gen.standard_normal((n, m))
        w = gen.chisquare(nu, n)
        core = z * np.sqrt(nu / w)[:, None]
    else:
        eta = spec.param
        u = _sphere_block(m, n, gen)
        r = np.sqrt(gen.beta(m / 2.0, eta + 1.0, n))
        core = r[:, None] * u

    return Sample(core @ chol_t + spec.location)


def write_csv(s: Sample, path, metadata: list[str] | None = None) -> None:
    """Write a sample as CSV: header x1,...,xm, round-trip floats.

    `metadata` lines, if given, are written first as '#' comments.
    """
    with open(path, "w", newline="") as fh:
        for line in metadata or ():
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(s.dim)])
        for row in s.points:
            writer.writerow([repr(float(v)) for v in row])


def read_csv(path) -> Sample:
    """Read a sample written by :func:`write_csv`, skipping '#' comments.

    Raises DomainError for an empty file, ragged rows, or non-numeric
    entries.
    """
    rows = []
    header = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or row[0].startswith("#"):
                continue
            if header is None:
                header = row
                width = len(header)
                continue
            if len(row) != width:
                raise DomainError(
                    f"{path}:{lineno}: expected {width} columns, got {len(row)}"
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise DomainError(f"{path}:{lineno}: non-numeric value") from None
    if header is None:
        raise DomainError(f"{path}: empty file")
    if not rows:
        raise DomainError(f"{path}: no data rows")
    return Sample(np.asarray(rows, dtype=float))
