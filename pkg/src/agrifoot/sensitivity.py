"""Monte Carlo propagation of device-parameter uncertainty.

Every sample draws, for each device type, one multiplicative log-normal
factor per perturbed parameter and an integer shift of the robot use
periodicity, then re-evaluates inventory and impacts.

Sample ``i`` uses its own generator seeded with
``SeedSequence(seed, spawn_key=(i,))``, so samples can run in any order or
in parallel and still give the same numbers.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _layout as L
from .allocation import AllocationProfile, allocation_table
from .catalog import Catalog, DeviceKind
from .distribution import FarmSizeDistribution
from .impact import GridIntensity
from .inventory import InventoryError, SystemKernel

METRICS = ("energy_kWh", "embodied_kg", "use_kg", "total_kg")

# selector -> kernel parameter column (None: handled outside the kernel)
PARAMETERS = {
    "capacity": L.CAPACITY_COL,
    "lifetime_years": None,
    "active_power": L.P_ACTIVE,
    "solar_daily_supplement": L.SOLAR,
    "travel_power": L.P_TRAVEL,
}
DEFAULT_RSD = 0.20
FAILURE_LIMIT = 0.01
QUANTILES = (5, 25, 50, 75, 95)


class SensitivityAbort(RuntimeError):
    """Too many Monte Carlo samples failed."""


def lognormal_sigma(rsd: float) -> float:
    """Log-space sigma of a log-normal whose coefficient of variation is ``rsd``."""
    return math.sqrt(math.log1p(rsd * rsd))


@dataclass(frozen=True)
class PerturbationSpec:
    lognormal_params: dict = field(
        default_factory=lambda: {
            "capacity": DEFAULT_RSD,
            "lifetime_years": DEFAULT_RSD,
            "active_power": DEFAULT_RSD,
            "solar_daily_supplement": DEFAULT_RSD,
        }
    )
    periodicity_jitter_days: int = 1
    samples: int = 10_000
    seed: int = 0
    # "median": nominal value is the median of the factor; "mean": its mean
    centre: str = "median"

    def __post_init__(self):
        object.__setattr__(self, "lognormal_params", dict(self.lognormal_params))
        for name, rsd in self.lognormal_params.items():
            if name not in PARAMETERS:
                raise ValueError(f"cannot perturb {name!r}; choose from {sorted(PARAMETERS)}")
            if not rsd > 0:
                raise ValueError(f"relative std of {name!r} must be > 0")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.periodicity_jitter_days < 0:
            raise ValueError("periodicity_jitter_days must be >= 0")
        if self.centre not in ("median", "mean"):
            raise ValueError("centre must be 'median' or 'mean'")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @classmethod
    def disabled(cls, samples: int = 1, seed: int = 0) -> "PerturbationSpec":
        return cls(lognormal_params={}, periodicity_jitter_days=0, samples=samples, seed=seed)

    @property
    def selectors(self) -> list[str]:
        return [p for p in PARAMETERS if p in self.lognormal_params]


@dataclass
class _Cell:
    label: str
    kernel: SystemKernel
    sizes: np.ndarray
    farms: np.ndarray
    device_index: np.ndarray  # position of each kernel device in the global device list


@dataclass
class SensitivityResult:
    ts_names: tuple[str, ...]
    samples: dict  # ts -> metric -> array(samples)
    spec: PerturbationSpec
    failures: list = field(default_factory=list)  # (sample_index, cause)

    def values(self, ts: str, metric: str) -> np.ndarray:
        return self.samples[ts][metric]

    def write_samples(self, path, delimiter=","):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            w.writerow(["sample_index", "ts", "metric", "value"])
            n = self.spec.samples
            for i in range(n):
                for ts in self.ts_names:
                    for m in METRICS:
                        w.writerow([i, ts, m, f"{self.samples[ts][m][i]:.6g}"])


def _cells(catalog: Catalog, target, dist: FarmSizeDistribution) -> list[_Cell]:
    sizes = dist.sizes_array
    counts = dist.counts_array
    if isinstance(target, AllocationProfile):
        table = allocation_table(target, dist)
        plan = []
        for j, name in enumerate(table.ts_names):
            idx = np.flatnonzero(table.shares[:, j] > 0)
            plan.append((name, idx, counts[idx] * table.shares[idx, j]))
    else:
        # each named TS deployed on every farm
        idx = np.arange(len(sizes))
        plan = [(name, idx, counts * 1.0) for name in target]
    cells = []
    for name, idx, farms in plan:
        kernel = SystemKernel(catalog.system(name))
        cells.append(_Cell(name, kernel, sizes[idx], farms, np.zeros(0, dtype=np.int_)))
    return cells


def _cell_metrics(cell: _Cell, params, lifetime, intensity):
    """Per-TS (energy kWh, embodied kg, use kg), summed with fsum."""
    q, e, _ = cell.kernel.evaluate(cell.sizes, params)
    farms = cell.farms
    scaled = q * farms
    emb = cell.kernel.embodied[:, None]
    alloc = cell.kernel.allocation[:, None]
    embodied = scaled * emb * alloc / lifetime[:, None]
    energy_wh = e * farms
    use = energy_wh / 1000.0 * intensity / 1000.0
    energy = energy_wh / 1000.0
    return (
        math.fsum(energy.ravel()),
        math.fsum(embodied.ravel()),
        math.fsum(use.ravel()),
    )


class _Sampler:
    def __init__(self, catalog, target, dist, grid: GridIntensity, spec: PerturbationSpec):
        self.spec = spec
        self.grid = grid
        self.cells = _cells(catalog, target, dist)
        names = sorted({d.name for c in self.cells for d in c.kernel.devices})
        self.device_names = names
        pos = {n: i for i, n in enumerate(names)}
        for c in self.cells:
            c.device_index = np.array([pos[d.name] for d in c.kernel.devices], dtype=np.int_)
        self.selectors = spec.selectors
        self.sigma = np.array([lognormal_sigma(spec.lognormal_params[p]) for p in self.selectors])
        self.mu = -0.5 * self.sigma**2 if spec.centre == "mean" else np.zeros(len(self.selectors))
        self.is_robot = np.array(
            [catalog.devices[n].kind is DeviceKind.ROBOTIC for n in names], dtype=bool
        )

    def draw(self, i: int):
        """(factors (devices, selectors), periodicity shifts (devices,)) for sample i."""
        n_dev = len(self.device_names)
        rng = np.random.default_rng(np.random.SeedSequence(self.spec.seed, spawn_key=(i,)))
        if self.selectors:
            z = rng.standard_normal((n_dev, len(self.selectors)))
            factors = np.exp(self.mu + self.sigma * z)
        else:
            factors = np.ones((n_dev, 0))
        j = self.spec.periodicity_jitter_days
        shifts = rng.integers(-j, j + 1, size=n_dev) if j > 0 else np.zeros(n_dev, dtype=np.int_)
        return factors, shifts

    def sample(self, i: int):
        factors, shifts = self.draw(i)
        out = []
        for c in self.cells:
            params = c.kernel.params.copy()
            lifetime = c.kernel.lifetime.copy()
            f = factors[c.device_index]
            for k, sel in enumerate(self.selectors):
                col = PARAMETERS[sel]
                if col is None:
                    lifetime = lifetime * f[:, k]
                else:
                    params[:, col] = params[:, col] * f[:, k]
            if self.spec.periodicity_jitter_days:
                robots = c.kernel.kinds == L.ROBOTIC
                shifted = params[:, L.PERIODICITY] + shifts[c.device_index]
                params[:, L.PERIODICITY] = np.where(
                    robots, np.maximum(shifted, 1.0), params[:, L.PERIODICITY]
                )
            energy, embodied, use = _cell_metrics(c, params, lifetime, self.grid.intensity)
            out.append((energy, embodied, use, embodied + use))
        return out


def run_sensitivity(
    catalog: Catalog,
    profile,
    dist: FarmSizeDistribution,
    grid: GridIntensity,
    spec: PerturbationSpec,
    threads: int = 1,
) -> SensitivityResult:
    """Monte Carlo over device parameters.

    ``profile`` is an :class:`AllocationProfile` (per-TS contributions of a
    mixed scenario) or a sequence of TS names, each then deployed on every
    farm independently.
    """
    sampler = _Sampler(catalog, profile, dist, grid, spec)
    labels = tuple(c.label for c in sampler.cells)
    n = spec.samples
    data = np.full((n, len(labels), len(METRICS)), np.nan)
    failures: list[tuple[int, str]] = []
    limit = FAILURE_LIMIT * n

    def work(chunk):
        local = []
        for i in chunk:
            try:
                data[i] = sampler.sample(i)
            except (InventoryError, ValueError, ZeroDivisionError, FloatingPointError) as exc:
                local.append((i, f"{type(exc).__name__}: {exc}"))
        return local

    chunks = [range(k, min(k + 256, n)) for k in range(0, n, 256)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, chunks))
    else:
        results = []
        for ch in chunks:
            results.append(work(ch))
            if sum(len(r) for r in results) > limit:
                break
    for r in results:
        failures.extend(r)
    failures.sort()
    if len(failures) > limit:
        first = failures[0][1]
        raise SensitivityAbort(
            f"{len(failures)} of {n} samples failed (limit {FAILURE_LIMIT:.0%}); first: {first}"
        )
    samples = {
        ts: {m: data[:, j, k].copy() for k, m in enumerate(METRICS)} for j, ts in enumerate(labels)
    }
    return SensitivityResult(labels, samples, spec, failures)


@dataclass(frozen=True)
class SummaryRow:
    ts: str
    metric: str
    mean: float
    rel_std: float
    quantiles: tuple[float, ...]


def summarize(result: SensitivityResult) -> list[SummaryRow]:
    rows = []
    for ts in result.ts_names:
        for m in METRICS:
            v = result.samples[ts][m]
            v = v[~np.isnan(v)]
            if v.size == 0:
                raise ValueError(f"no successful samples for {ts}")
            mean = float(np.mean(v))
            std = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
            rel = std / mean if mean != 0 else 0.0
            qs = tuple(float(x) for x in np.percentile(v, QUANTILES))
            rows.append(SummaryRow(ts, m, mean, rel, qs))
    return rows


def write_summary(rows, path, delimiter=","):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(["ts", "metric", "mean", "rel_std", *(f"p{q}" for q in QUANTILES)])
        for r in rows:
            w.writerow([r.ts, r.metric, f"{r.mean:.6g}", f"{r.rel_std:.6g}", *(f"{x:.6g}" for x in r.quantiles)])
