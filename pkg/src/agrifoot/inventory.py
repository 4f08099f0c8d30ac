"""Device quantities and annual energy per (farm size, TS, device)."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _layout as L
from . import kernels
from ._exact import guarded_ceil
from .allocation import AllocationProfile, allocation_table
from .catalog import Catalog, CatalogError, DeviceKind, DeviceSpec, TechnologicalSystem, validate_catalog
from .distribution import FarmSizeDistribution, SizeUnit

_KIND_CODE = {
    DeviceKind.FIXED_PER_FARM: L.FIXED,
    DeviceKind.CAPACITY_SCALED: L.CAPACITY,
    DeviceKind.DEPENDENT: L.DEPENDENT,
    DeviceKind.ROBOTIC: L.ROBOTIC,
}


class InventoryError(ValueError):
    """Engine failure, annotated with the (size, TS, device) being computed."""


class FeasibilityWarning(UserWarning):
    """A robot pass does not fit within its use periodicity."""


# -- scalar formulas ----------------------------------------------------------


def device_quantity(
    device: DeviceSpec, s: float, base_quantity: float = 1.0, parent_quantity: float | None = None
) -> float:
    """Number of ``device`` units on one farm of size ``s``.

    ``parent_quantity`` is required for dependent devices.
    """
    kind = device.kind
    if kind is DeviceKind.FIXED_PER_FARM:
        return float(base_quantity)
    if kind is DeviceKind.DEPENDENT:
        if parent_quantity is None:
            raise InventoryError(f"{device.name}: dependent device needs its parent quantity")
        ratio = device.depends_on.ratio if device.depends_on else 1.0
        return guarded_ceil(ratio * parent_quantity, (ratio, parent_quantity))
    if not device.capacity > 0:
        raise InventoryError(f"{device.name}: capacity must be > 0 (got {device.capacity})")
    if kind is DeviceKind.CAPACITY_SCALED:
        return guarded_ceil(s / device.capacity, (s,), (device.capacity,))
    return robot_quantity(device, s)


def robot_quantity(device: DeviceSpec, s: float) -> float:
    """Robots needed so one pass over ``s`` hectares fits the periodicity."""
    U, C, T = device.use_periodicity_days, device.capacity, device.active_hours_per_day
    if not (U > 0 and C > 0 and T > 0):
        raise InventoryError(f"{device.name}: periodicity, capacity and active hours must be > 0")
    return guarded_ceil(s / (U * C * T), (s,), (U, C, T))


def robot_total_work_time(device: DeviceSpec, s: float, q_r: float) -> float:
    """Hours each of ``q_r`` robots works to treat ``s`` hectares once."""
    return s / (q_r * device.capacity)


def annual_energy_nonrobotic(device: DeviceSpec, s: float, quantity: float | None = None) -> float:
    """Wh/year of the per-farm quantity of a non-robotic device."""
    if device.kind is DeviceKind.ROBOTIC:
        raise InventoryError(f"{device.name}: use annual_energy_robotic for robots")
    q = device_quantity(device, s) if quantity is None else quantity
    per_day = device.active_hours_per_day * device.active_power + device.sleep_hours_per_day * device.sleep_power
    return q * L.DAYS_PER_YEAR * per_day


def robot_working_days(device: DeviceSpec, s: float, q_r: float) -> float:
    t_total = robot_total_work_time(device, s, q_r)
    return guarded_ceil(
        t_total / device.active_hours_per_day, (s,), (q_r, device.capacity, device.active_hours_per_day)
    )


def annual_energy_robotic(device: DeviceSpec, s: float) -> float:
    """Wh/year of the robot fleet of one farm, clamped at zero.

    Work hours are charged at active power; every working day adds one
    travel period net of the solar supplement.
    """
    if device.kind is not DeviceKind.ROBOTIC:
        raise InventoryError(f"{device.name}: not a robotic device")
    if not device.active_hours_per_day > 0:
        raise InventoryError(f"{device.name}: active_hours_per_day must be > 0")
    q = robot_quantity(device, s)
    t_total = robot_total_work_time(device, s, q)
    days = robot_working_days(device, s, q)
    travel = device.travel_power * device.travel_hours_per_day - device.solar_daily_supplement
    e = device.passes_per_year * q * (device.active_power * t_total + travel * days)
    return 0.0 if e < 0.0 else e


def derive_capacity(width_m: float, speed_kmh: float, field_efficiency: float = 1.0) -> float:
    """Treatment capacity in ha/h from working width (m) and speed (km/h)."""
    if not (width_m > 0 and speed_kmh > 0 and 0 < field_efficiency <= 1):
        raise ValueError("width and speed must be > 0 and field_efficiency in (0, 1]")
    # m * km/h = 1000 m^2/h = 0.1 ha/h
    return width_m * speed_kmh * field_efficiency / 10.0


# -- vectorised per-system evaluation -----------------------------------------


def device_params(device: DeviceSpec, base_quantity: float = 1.0) -> np.ndarray:
    row = np.zeros(L.N_PARAMS)
    row[L.BASE_QTY] = base_quantity
    row[L.CAPACITY_COL] = device.capacity
    row[L.RATIO] = device.depends_on.ratio if device.depends_on else 1.0
    row[L.P_ACTIVE] = device.active_power
    row[L.P_SLEEP] = device.sleep_power
    row[L.P_TRAVEL] = device.travel_power
    row[L.T_ACTIVE] = device.active_hours_per_day
    row[L.T_SLEEP] = device.sleep_hours_per_day
    row[L.T_TRAVEL] = device.travel_hours_per_day
    row[L.PERIODICITY] = device.use_periodicity_days
    row[L.PASSES] = device.passes_per_year
    row[L.SOLAR] = device.solar_daily_supplement
    return row


@dataclass
class SystemKernel:
    """Parameter arrays of one TS, ready for the compiled kernel."""

    system: TechnologicalSystem
    devices: list[DeviceSpec] = field(init=False)
    kinds: np.ndarray = field(init=False)
    params: np.ndarray = field(init=False)
    parents: np.ndarray = field(init=False)

    def __post_init__(self):
        entries = self.system.ordered_entries()
        self.devices = [e.device for e in entries]
        index = {d.name: i for i, d in enumerate(self.devices)}
        self.kinds = np.array([_KIND_CODE[d.kind] for d in self.devices], dtype=np.int_)
        self.params = (
            np.array([device_params(e.device, e.quantity) for e in entries])
            if entries
            else np.zeros((0, L.N_PARAMS))
        )
        self.parents = np.array(
            [index[d.depends_on.device] if d.kind is DeviceKind.DEPENDENT else -1 for d in self.devices],
            dtype=np.int_,
        )
        for d in self.devices:
            self._check(d)

    def _check(self, d: DeviceSpec):
        where = f"TS {self.system.name!r}, device {d.name!r}"
        if d.kind in (DeviceKind.CAPACITY_SCALED, DeviceKind.ROBOTIC) and not d.capacity > 0:
            raise InventoryError(f"{where}: capacity must be > 0")
        if d.kind is DeviceKind.ROBOTIC:
            if not d.active_hours_per_day > 0:
                raise InventoryError(f"{where}: active_hours_per_day must be > 0")
            if not d.use_periodicity_days > 0:
                raise InventoryError(f"{where}: use_periodicity_days must be > 0")

    @property
    def embodied(self) -> np.ndarray:
        return np.array([d.embodied_ghg for d in self.devices])

    @property
    def allocation(self) -> np.ndarray:
        return np.array([d.allocation_fraction for d in self.devices])

    @property
    def lifetime(self) -> np.ndarray:
        return np.array([d.lifetime_years for d in self.devices])

    def evaluate(self, sizes, params=None):
        """(quantity, energy Wh, robot days) arrays of shape (devices, sizes)."""
        p = self.params if params is None else params
        return kernels.evaluate_devices(sizes, self.kinds, p, self.parents)


# -- inventory ----------------------------------------------------------------


@dataclass(frozen=True)
class InventoryRecord:
    farm_size: float
    ts_name: str
    device_name: str
    farms: float  # n_i * t_j(s_i)
    per_farm_quantity: float
    scaled_quantity: float
    annual_energy_per_farm: float  # Wh/year

    @property
    def annual_energy(self) -> float:
        """Wh/year over all farms of the record."""
        return self.annual_energy_per_farm * self.farms


@dataclass
class Inventory:
    records: list[InventoryRecord]
    devices: dict[str, DeviceSpec]
    size_unit: SizeUnit = SizeUnit.HECTARES

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    @cached_property
    def total_quantity(self) -> dict[str, float]:
        out: dict[str, list[float]] = {}
        for r in self.records:
            out.setdefault(r.device_name, []).append(r.scaled_quantity)
        return {k: math.fsum(v) for k, v in sorted(out.items())}

    def write(self, path, delimiter=","):
        unit = self.size_unit.value
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            w.writerow([
                f"size_{unit}", "ts", "device", "farms", "per_farm_quantity",
                "scaled_quantity", "annual_energy_Wh_per_farm",
            ])
            for r in self.records:
                w.writerow([
                    f"{r.farm_size:.6g}", r.ts_name, r.device_name, f"{r.farms:.6g}",
                    f"{r.per_farm_quantity:.6g}", f"{r.scaled_quantity:.6g}",
                    f"{r.annual_energy_per_farm:.6g}",
                ])


def check_feasibility(kernel: SystemKernel, sizes, days, params=None):
    p = kernel.params if params is None else params
    for d, kind in enumerate(kernel.kinds):
        if kind != L.ROBOTIC:
            continue
        over = days[d] > p[d, L.PERIODICITY]
        if np.any(over):
            s = float(np.asarray(sizes)[over][0])
            warnings.warn(
                f"TS {kernel.system.name!r}, robot {kernel.devices[d].name!r}: "
                f"pass needs {days[d][over][0]:g} days at size {s:g}, "
                f"periodicity is {p[d, L.PERIODICITY]:g}",
                FeasibilityWarning,
                stacklevel=3,
            )


def _kernels_for(catalog: Catalog, names) -> dict[str, SystemKernel]:
    out = {}
    for name in names:
        try:
            ts = catalog.system(name)
            out[name] = SystemKernel(ts)
        except CatalogError as exc:
            raise InventoryError(str(exc)) from None
    return out


def build_inventory(
    catalog: Catalog, profile: AllocationProfile, dist: FarmSizeDistribution
) -> Inventory:
    """Device inventory of the territory, one record per (size, TS, device).

    Records where the TS share is zero are omitted.
    """
    used = profile.ts_names
    problems = validate_catalog([catalog.system(n) for n in used if n in catalog.systems])
    missing = [n for n in used if n not in catalog.systems]
    if missing:
        raise InventoryError(f"profile names unknown systems {missing}")
    if problems:
        raise InventoryError("invalid catalog: " + "; ".join(problems))
    table = allocation_table(profile, dist)
    sizes = dist.sizes_array
    counts = dist.counts_array
    kernels_ = _kernels_for(catalog, used)

    cells: dict[str, tuple] = {}
    for j, name in enumerate(used):
        shares = table.shares[:, j]
        idx = np.flatnonzero(shares > 0)
        k = kernels_[name]
        q, e, days = k.evaluate(sizes[idx])
        check_feasibility(k, sizes[idx], days)
        cells[name] = (idx, shares, q, e)

    records = []
    for i, s in enumerate(sizes):
        for name in used:
            idx, shares, q, e = cells[name]
            pos = np.searchsorted(idx, i)
            if pos >= len(idx) or idx[pos] != i:
                continue
            farms = counts[i] * shares[i]
            for d, dev in enumerate(kernels_[name].devices):
                pq = float(q[d, pos])
                records.append(
                    InventoryRecord(
                        float(s), name, dev.name, float(farms), pq, pq * farms, float(e[d, pos])
                    )
                )
    return Inventory(records, dict(catalog.devices), dist.size_unit)
