"""Embodied and use-phase GHG of an inventory, plus comparison baselines.

Masses are kg CO2e/year, energies kWh/year unless a name says otherwise.
Aggregations use ``math.fsum`` so totals do not depend on summation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

from .allocation import AllocationProfile
from .catalog import Catalog, DeviceSpec
from .distribution import FarmSizeDistribution, SizeUnit, average_size, total_farms
from .inventory import Inventory, build_inventory


@dataclass(frozen=True)
class GridIntensity:
    name: str
    intensity: float  # g CO2e / kWh

    def __post_init__(self):
        if not self.intensity > 0:
            raise ValueError(f"grid intensity must be > 0 (got {self.intensity})")


FR_GRID = GridIntensity("FR", 68.0)


def embodied_annual(device: DeviceSpec, quantity: float) -> float:
    """Cradle-to-gate footprint of ``quantity`` units spread over the lifetime."""
    if not device.lifetime_years > 0:
        raise ValueError(f"{device.name}: lifetime_years must be > 0")
    return quantity * device.embodied_ghg * device.allocation_fraction / device.lifetime_years


def use_annual(energy_wh: float, grid: GridIntensity) -> float:
    if energy_wh < 0:
        raise ValueError("energy must be >= 0")
    return energy_wh / 1000.0 * grid.intensity / 1000.0


@dataclass(frozen=True)
class AssessmentRecord:
    size: float
    ts: str
    device: str
    group: str
    farms: float
    embodied: float
    use: float
    energy_kwh: float

    @property
    def total(self) -> float:
        return self.embodied + self.use


@dataclass(frozen=True)
class Totals:
    embodied: float
    use: float
    energy_kwh: float

    @property
    def total(self) -> float:
        return self.embodied + self.use

    @classmethod
    def of(cls, records) -> "Totals":
        records = list(records)
        return cls(
            math.fsum(r.embodied for r in records),
            math.fsum(r.use for r in records),
            math.fsum(r.energy_kwh for r in records),
        )


@dataclass
class AssessmentResult:
    records: list[AssessmentRecord]
    grid: GridIntensity
    size_unit: SizeUnit = SizeUnit.HECTARES
    _groups: dict = field(default_factory=dict, repr=False)

    @cached_property
    def totals(self) -> Totals:
        return Totals.of(self.records)

    def breakdown(self, axis: str) -> dict:
        """Totals keyed by ``device``, ``group``, ``ts`` or ``size`` (sorted keys)."""
        if axis not in ("device", "group", "ts", "size"):
            raise ValueError(f"unknown breakdown axis {axis!r}")
        if axis not in self._groups:
            buckets: dict = {}
            for r in self.records:
                buckets.setdefault(getattr(r, axis), []).append(r)
            self._groups[axis] = {k: Totals.of(v) for k, v in sorted(buckets.items())}
        return self._groups[axis]

    @property
    def use_share(self) -> float:
        t = self.totals
        return t.use / t.total if t.total > 0 else 0.0


def assess(inventory: Inventory, grid: GridIntensity = FR_GRID) -> AssessmentResult:
    records = []
    for r in inventory:
        device = inventory.devices[r.device_name]
        energy_wh = r.annual_energy_per_farm * r.farms
        records.append(
            AssessmentRecord(
                r.farm_size,
                r.ts_name,
                r.device_name,
                device.group,
                r.farms,
                embodied_annual(device, r.scaled_quantity),
                use_annual(energy_wh, grid),
                energy_wh / 1000.0,
            )
        )
    return AssessmentResult(records, grid, inventory.size_unit)


def _as_profile(ts_or_profile) -> AllocationProfile:
    if isinstance(ts_or_profile, AllocationProfile):
        return ts_or_profile
    return AllocationProfile.full_deployment(str(ts_or_profile))


def average_distribution(dist: FarmSizeDistribution) -> FarmSizeDistribution:
    """All farms collapsed onto the mean farm size."""
    return FarmSizeDistribution((average_size(dist),), (total_farms(dist),), dist.size_unit)


def assess_average_baseline(
    catalog: Catalog, ts, dist: FarmSizeDistribution, grid: GridIntensity = FR_GRID
) -> Totals:
    """Per-farm footprint at the mean size, times the number of farms.

    ``ts`` is a TS name (full deployment) or an allocation profile.
    """
    avg = average_distribution(dist)
    return assess(build_inventory(catalog, _as_profile(ts), avg), grid).totals


def baseline_gap(catalog: Catalog, ts, dist, grid: GridIntensity = FR_GRID) -> float:
    """Relative difference (baseline - distribution) / distribution of total GHG."""
    exact = assess(build_inventory(catalog, _as_profile(ts), dist), grid).totals.total
    approx = assess_average_baseline(catalog, ts, dist, grid).total
    return (approx - exact) / exact


@dataclass(frozen=True)
class EfficiencyPoint:
    size: float
    total_per_unit: float
    use_per_unit: float
    energy_kwh_per_unit: float


def efficiency_curve(
    result: AssessmentResult, dist: FarmSizeDistribution | None = None
) -> list[EfficiencyPoint]:
    """kg CO2e per head (or hectare) for each farm size; sizes without farms are skipped."""
    if dist is not None and dist.size_unit is not result.size_unit:
        raise ValueError(f"size units differ: {dist.size_unit.value} vs {result.size_unit.value}")
    by_size: dict[float, list[AssessmentRecord]] = {}
    for r in result.records:
        by_size.setdefault(r.size, []).append(r)
    points = []
    for s in sorted(by_size):
        recs = by_size[s]
        # farms per (size, TS) appear once per device; count each TS once
        farms = math.fsum({r.ts: r.farms for r in recs}.values())
        if not farms > 0:
            continue
        t = Totals.of(recs)
        units = s * farms
        points.append(EfficiencyPoint(s, t.total / units, t.use / units, t.energy_kwh / units))
    return points


def thermal_baseline(surface_ha: float, passes, emission_factor: float) -> float:
    """kg CO2e/year of diesel machinery doing ``passes`` over ``surface_ha``.

    ``passes`` is a sequence of ``(operation, litres per ha)``;
    ``emission_factor`` is kg CO2e per litre of non-road diesel.
    """
    if surface_ha < 0 or emission_factor < 0:
        raise ValueError("surface and emission factor must be >= 0")
    litres = []
    for op, l_per_ha in passes:
        if l_per_ha < 0:
            raise ValueError(f"{op}: fuel use must be >= 0")
        litres.append(l_per_ha * emission_factor)
    return surface_ha * math.fsum(litres)
