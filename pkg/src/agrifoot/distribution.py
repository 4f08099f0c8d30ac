"""Farm-size distributions and dense reconstruction from coarse bins."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.optimize import nnls


class SizeUnit(str, Enum):
    HEADS = "heads"
    HECTARES = "hectares"


class DistributionError(ValueError):
    pass


class ReconstructionError(DistributionError):
    """No continuous non-negative density reproduces the coarse statistics."""


@dataclass(frozen=True)
class FarmSizeDistribution:
    """Farm counts ``counts[i]`` for each farm size ``sizes[i]``.

    Counts may be fractional (densified distributions are statistical).
    """

    sizes: tuple[float, ...]
    counts: tuple[float, ...]
    size_unit: SizeUnit = SizeUnit.HECTARES

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(float(s) for s in self.sizes))
        object.__setattr__(self, "counts", tuple(float(c) for c in self.counts))
        object.__setattr__(self, "size_unit", SizeUnit(self.size_unit))
        if len(self.sizes) != len(self.counts):
            raise DistributionError(
                f"sizes ({len(self.sizes)}) and counts ({len(self.counts)}) differ in length"
            )
        for s in self.sizes:
            if not s > 0 or not math.isfinite(s):
                raise DistributionError(f"farm size must be positive and finite, got {s}")
        for a, b in zip(self.sizes, self.sizes[1:]):
            if not b > a:
                raise DistributionError(f"sizes must be strictly increasing ({a} then {b})")
        for c in self.counts:
            if not c >= 0 or not math.isfinite(c):
                raise DistributionError(f"farm count must be non-negative, got {c}")

    def __len__(self):
        return len(self.sizes)

    @property
    def sizes_array(self) -> np.ndarray:
        return np.asarray(self.sizes, dtype=float)

    @property
    def counts_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float)

    def filtered(self, min_size: float | None = None, max_size: float | None = None):
        """Drop sizes outside ``[min_size, max_size]`` (ingestion-time exclusion)."""
        keep = [
            (s, c)
            for s, c in zip(self.sizes, self.counts)
            if (min_size is None or s >= min_size) and (max_size is None or s <= max_size)
        ]
        return FarmSizeDistribution(
            tuple(s for s, _ in keep), tuple(c for _, c in keep), self.size_unit
        )


def total_farms(dist: FarmSizeDistribution) -> float:
    return math.fsum(dist.counts)


def total_size(dist: FarmSizeDistribution) -> float:
    return math.fsum(s * n for s, n in zip(dist.sizes, dist.counts))


def average_size(dist: FarmSizeDistribution) -> float:
    farms = total_farms(dist)
    if farms <= 0:
        raise DistributionError("average size of an empty distribution is undefined")
    return total_size(dist) / farms


def read_distribution_csv(
    path: str | Path, size_unit: SizeUnit | str = SizeUnit.HECTARES
) -> FarmSizeDistribution:
    """Read a ``size,count`` table (comma or tab delimited, header required)."""
    text = Path(path).read_text()
    dialect = csv.Sniffer().sniff(text.splitlines()[0], delimiters=",\t;")
    rows = list(csv.DictReader(text.splitlines(), dialect=dialect))
    if not rows or "size" not in rows[0] or "count" not in rows[0]:
        raise DistributionError(f"{path}: expected columns 'size' and 'count'")
    pairs = sorted((float(r["size"]), float(r["count"])) for r in rows)
    return FarmSizeDistribution(
        tuple(p[0] for p in pairs), tuple(p[1] for p in pairs), SizeUnit(size_unit)
    )


# -- dense reconstruction -----------------------------------------------------


@dataclass(frozen=True)
class CoarseBinSpec:
    bin_edges: tuple[float, ...]
    bin_counts: tuple[float, ...]
    target_total_farms: float
    target_total_size: float

    def __post_init__(self):
        object.__setattr__(self, "bin_edges", tuple(float(e) for e in self.bin_edges))
        object.__setattr__(self, "bin_counts", tuple(float(c) for c in self.bin_counts))
        if len(self.bin_edges) != len(self.bin_counts) + 1:
            raise DistributionError("bin_edges must have one more entry than bin_counts")
        if any(b <= a for a, b in zip(self.bin_edges, self.bin_edges[1:])):
            raise DistributionError("bin_edges must be strictly increasing")
        if any(c < 0 for c in self.bin_counts):
            raise DistributionError("bin_counts must be non-negative")
        if abs(math.fsum(self.bin_counts) - self.target_total_farms) > 0.5:
            raise DistributionError(
                f"bin_counts sum to {math.fsum(self.bin_counts)}, "
                f"target_total_farms is {self.target_total_farms}"
            )


@dataclass(frozen=True)
class PiecewiseLinearDensity:
    """Continuous density (farms per size unit) linear between ``knots``."""

    knots: np.ndarray = field(repr=False)
    heights: np.ndarray = field(repr=False)

    def __call__(self, s):
        return np.interp(s, self.knots, self.heights, left=0.0, right=0.0)

    @property
    def max_slope(self) -> float:
        return float(np.max(np.abs(np.diff(self.heights) / np.diff(self.knots))))


COUNT_TOLERANCE = 1e-3
SIZE_TOLERANCE = 5e-3


def _sample_sizes(edges, step):
    lo, hi = edges[0], edges[-1]
    n = int(math.floor((hi - lo) / step + 1e-9))
    sizes = lo + step * np.arange(n + 1)
    if hi - sizes[-1] > 1e-9 * max(1.0, hi):
        sizes = np.append(sizes, hi)
    return sizes


def bin_membership(sizes, edges) -> np.ndarray:
    """Weights W[k, i] of size i in bin k.

    A size lying exactly on an interior edge counts half in each neighbouring
    bin; the outer edges belong wholly to the first and last bin.
    """
    sizes = np.asarray(sizes, dtype=float)
    edges = np.asarray(edges, dtype=float)
    tol = 1e-9 * max(1.0, float(np.abs(edges).max()))
    W = np.zeros((len(edges) - 1, len(sizes)))
    for k in range(len(edges) - 1):
        lo, hi = edges[k], edges[k + 1]
        inside = (sizes > lo + tol) & (sizes < hi - tol)
        W[k, inside] = 1.0
        W[k, np.abs(sizes - lo) <= tol] = 1.0 if k == 0 else 0.5
        W[k, np.abs(sizes - hi) <= tol] = 1.0 if k == len(edges) - 2 else 0.5
    return W


def _hat_basis(sizes, knots):
    """Matrix B with B[k, j] = value of the j-th linear hat function at sizes[k]."""
    basis = np.zeros((len(sizes), len(knots)))
    for j in range(len(knots)):
        unit = np.zeros(len(knots))
        unit[j] = 1.0
        basis[:, j] = np.interp(sizes, knots, unit)
    return basis


def fit_density(
    coarse: CoarseBinSpec, step: float, smoothing: float = 1e-10
) -> tuple[PiecewiseLinearDensity, np.ndarray]:
    """Fit non-negative knot heights so that the sampled counts match the bins.

    Knots sit on every bin edge and bin midpoint.  The discrete per-bin sums
    and the discrete size-weighted total are the constraints; a small
    second-difference penalty selects the smoothest admissible shape.
    Returns the density and the sample sizes it was fitted on.
    """
    if not step > 0:
        raise DistributionError("step must be positive")
    edges = np.asarray(coarse.bin_edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    knots = np.sort(np.concatenate([edges, mids]))
    sizes = _sample_sizes(edges, step)
    basis = _hat_basis(sizes, knots) * step
    A = np.vstack([bin_membership(sizes, edges) @ basis, sizes @ basis])
    t = np.array([*coarse.bin_counts, coarse.target_total_size])
    # relative residuals; empty bins are matched absolutely
    scale = np.where(t > 0, t, 1.0)
    A_rel = A / scale[:, None]
    t_rel = t / scale

    # second differences of heights, normalised to the typical height
    h_ref = coarse.target_total_farms / (edges[-1] - edges[0]) or 1.0
    m = len(knots)
    D = np.zeros((max(m - 2, 0), m))
    for i in range(m - 2):
        D[i, i : i + 3] = (1.0, -2.0, 1.0)
    D /= h_ref

    weight = 1.0 / math.sqrt(smoothing)
    lhs = np.vstack([weight * A_rel, D])
    rhs = np.concatenate([weight * t_rel, np.zeros(D.shape[0])])
    heights, _ = nnls(lhs, rhs, maxiter=50 * m)
    return PiecewiseLinearDensity(knots, heights), sizes


def densify(coarse: CoarseBinSpec, step: float = 1.0, size_unit=SizeUnit.HECTARES):
    """Dense farm-size distribution reproducing ``coarse`` on a regular grid.

    Raises ReconstructionError when per-bin counts cannot be met within 0.1 %
    or the size total within 0.5 %.
    """
    density, sizes = fit_density(coarse, step)
    counts = density(sizes) * step
    counts = np.where(counts < 0, 0.0, counts)

    edges = np.asarray(coarse.bin_edges)
    per_bin = bin_membership(sizes, edges) @ counts
    for k, target in enumerate(coarse.bin_counts):
        got = float(per_bin[k])
        if abs(got - target) > COUNT_TOLERANCE * max(target, 1.0):
            raise ReconstructionError(
                f"bin [{edges[k]}, {edges[k + 1]}]: reconstructed {got:.6g} farms, expected {target:.6g}"
            )
    got_size = float(sizes @ counts)
    if abs(got_size - coarse.target_total_size) > SIZE_TOLERANCE * coarse.target_total_size:
        raise ReconstructionError(
            f"reconstructed total size {got_size:.6g}, expected {coarse.target_total_size:.6g}"
        )
    return FarmSizeDistribution(tuple(sizes), tuple(counts), SizeUnit(size_unit))
