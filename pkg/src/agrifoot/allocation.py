"""Shares of technological systems per farm size from bell-shaped weights."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


class CoverageGapError(ValueError):
    """No technological system has positive weight at some farm size."""

    def __init__(self, sizes, supports=()):
        self.sizes = tuple(float(s) for s in sizes)
        self.supports = tuple(supports)
        shown = ", ".join(f"{s:g}" for s in self.sizes[:20])
        more = f" (+{len(self.sizes) - 20} more)" if len(self.sizes) > 20 else ""
        msg = f"no technological system covers farm size(s) {shown}{more}"
        if self.supports:
            msg += "; supports: " + ", ".join(
                f"{ts} [{a:g}, {b:g}] w={w:g}" for ts, a, b, w in self.supports
            )
        super().__init__(msg)


def quartic(m):
    """Bell ``(1 - m^2)^2`` on the normalised coordinate m in [-1, 1]."""
    return (1.0 - m * m) ** 2


def flat(m):
    return 1.0


SHAPES: dict[str, Callable] = {"quartic": quartic, "constant": flat}


@dataclass(frozen=True)
class AllocationEntry:
    ts: str
    a: float
    b: float
    w: float
    shape: str = "quartic"

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"{self.ts}: support needs a < b (got [{self.a}, {self.b}])")
        if not 0.0 <= self.w <= 1.0:
            raise ValueError(f"{self.ts}: weight must lie in [0, 1] (got {self.w})")
        if self.shape not in SHAPES:
            raise ValueError(f"{self.ts}: unknown shape {self.shape!r}")


@dataclass(frozen=True)
class AllocationProfile:
    entries: tuple[AllocationEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    @classmethod
    def full_deployment(cls, ts: str) -> "AllocationProfile":
        """Every farm, whatever its size, carries ``ts``."""
        return cls((AllocationEntry(ts, 0.0, math.inf, 1.0, "constant"),))

    @classmethod
    def from_records(cls, records) -> "AllocationProfile":
        return cls(
            tuple(
                AllocationEntry(
                    str(r["ts"]), float(r["a"]), float(r["b"]), float(r["w"]), r.get("shape", "quartic")
                )
                for r in records
            )
        )

    @property
    def ts_names(self) -> list[str]:
        """Distinct TS names in first-appearance order."""
        return list(dict.fromkeys(e.ts for e in self.entries))

    def supports(self):
        return [(e.ts, e.a, e.b, e.w) for e in self.entries]


def raw_weight(entry: AllocationEntry, s: float) -> float:
    if not entry.a <= s <= entry.b:
        return 0.0
    if entry.shape == "constant":
        return entry.w
    m = (2.0 * s - entry.a - entry.b) / (entry.b - entry.a)
    return entry.w * SHAPES[entry.shape](m)


def _raw_by_ts(profile: AllocationProfile, s: float) -> dict[str, float]:
    # entries naming the same TS add up
    acc: dict[str, list[float]] = {ts: [] for ts in profile.ts_names}
    for e in profile.entries:
        acc[e.ts].append(raw_weight(e, s))
    return {ts: math.fsum(v) for ts, v in acc.items()}


def mass_function(profile: AllocationProfile, s: float) -> list[tuple[str, float]]:
    """Normalised shares ``t_j(s)`` in profile order.

    Raises CoverageGapError when every raw weight vanishes at ``s``.
    """
    raw = _raw_by_ts(profile, s)
    total = math.fsum(raw.values())
    if not total > 0:
        raise CoverageGapError([s], profile.supports())
    return [(ts, r / total) for ts, r in raw.items()]


@dataclass(frozen=True)
class AllocationTable:
    sizes: np.ndarray
    ts_names: tuple[str, ...]
    shares: np.ndarray  # (n_sizes, n_ts)

    def column(self, ts: str) -> np.ndarray:
        return self.shares[:, self.ts_names.index(ts)]

    def write(self, path, delimiter=",", size_label="size"):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            w.writerow([size_label, *(f"{ts}_share" for ts in self.ts_names)])
            for s, row in zip(self.sizes, self.shares):
                w.writerow([f"{s:.6g}", *(f"{v:.6g}" for v in row)])


def raw_matrix(profile: AllocationProfile, sizes) -> np.ndarray:
    """Raw weights summed per TS, shape (len(sizes), len(ts_names))."""
    s = np.asarray(sizes, dtype=float)
    names = profile.ts_names
    col = {ts: j for j, ts in enumerate(names)}
    raw = np.zeros((len(s), len(names)))
    for e in profile.entries:
        inside = (s >= e.a) & (s <= e.b)
        if e.shape == "constant":
            r = np.where(inside, e.w, 0.0)
        else:
            m = (2.0 * s[inside] - e.a - e.b) / (e.b - e.a)
            r = np.zeros(len(s))
            r[inside] = e.w * SHAPES[e.shape](m)
        raw[:, col[e.ts]] += r
    return raw


def allocation_table(profile: AllocationProfile, dist) -> AllocationTable:
    """Shares for every size of ``dist`` (a distribution or a size sequence).

    Raises CoverageGapError listing every uncovered size.
    """
    sizes = np.asarray(getattr(dist, "sizes", dist), dtype=float)
    raw = raw_matrix(profile, sizes)
    total = raw.sum(axis=1)
    gap = ~(total > 0)
    if np.any(gap):
        raise CoverageGapError(sizes[gap].tolist(), profile.supports())
    return AllocationTable(sizes, tuple(profile.ts_names), raw / total[:, None])


def coverage_gaps(profile: AllocationProfile, sizes) -> list[float]:
    sizes = np.asarray(sizes, dtype=float)
    total = raw_matrix(profile, sizes).sum(axis=1)
    return sizes[~(total > 0)].tolist()
