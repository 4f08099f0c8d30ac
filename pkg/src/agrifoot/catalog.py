"""Device specifications and technological systems (TS).

A catalog file is YAML with two top-level blocks::

    devices:
      - name: laptop
        kind: fixed_per_farm
        active_power: 30
        ...
    systems:
      - name: TS_RFID
        farming_tasks: [identification]
        devices:
          - {device: laptop, quantity: 1}
          - {device: rfid_chip}

Device fields carry the same names as :class:`DeviceSpec`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path

import yaml


class DeviceKind(str, Enum):
    FIXED_PER_FARM = "fixed_per_farm"
    CAPACITY_SCALED = "capacity_scaled"
    DEPENDENT = "dependent"
    ROBOTIC = "robotic"


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class Dependency:
    device: str
    ratio: float = 1.0


@dataclass(frozen=True)
class DeviceSpec:
    """One device type.

    Powers are in W, durations in h/day, ``capacity`` in heads per device
    (capacity_scaled) or ha/h per device (robotic), ``embodied_ghg`` in
    kg CO2e per unit and ``solar_daily_supplement`` in Wh/day.
    """

    name: str
    kind: DeviceKind
    active_power: float = 0.0
    sleep_power: float = 0.0
    travel_power: float = 0.0
    active_hours_per_day: float = 0.0
    sleep_hours_per_day: float = 0.0
    travel_hours_per_day: float = 0.0
    capacity: float = 0.0
    use_periodicity_days: float = 0.0
    passes_per_year: float = 0.0
    solar_daily_supplement: float = 0.0
    embodied_ghg: float = 0.0
    lifetime_years: float = 1.0
    depends_on: Dependency | None = None
    allocation_fraction: float = 1.0
    label: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", DeviceKind(self.kind))
        if isinstance(self.depends_on, dict):
            object.__setattr__(self, "depends_on", Dependency(**self.depends_on))

    @property
    def group(self) -> str:
        """Reporting label (falls back to the device name)."""
        return self.label or self.name


@dataclass(frozen=True)
class DeviceEntry:
    device: DeviceSpec
    quantity: float = 1.0


@dataclass(frozen=True)
class TechnologicalSystem:
    name: str
    devices: tuple[DeviceEntry, ...]
    farming_tasks: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(self.devices))
        object.__setattr__(self, "farming_tasks", frozenset(self.farming_tasks))

    def device(self, name: str) -> DeviceEntry:
        for entry in self.devices:
            if entry.device.name == name:
                return entry
        raise KeyError(name)

    def ordered_entries(self) -> list[DeviceEntry]:
        """Entries with every dependency placed before its dependents.

        Raises CatalogError on dangling references or cycles.
        """
        by_name = {e.device.name: e for e in self.devices}
        done: dict[str, DeviceEntry] = {}
        visiting: set[str] = set()

        def visit(entry):
            name = entry.device.name
            if name in done:
                return
            if name in visiting:
                raise CatalogError(f"{self.name}: dependency cycle through {name!r}")
            visiting.add(name)
            dep = entry.device.depends_on
            if entry.device.kind is DeviceKind.DEPENDENT:
                if dep is None or dep.device not in by_name:
                    target = dep.device if dep else None
                    raise CatalogError(f"{self.name}: {name!r} depends on absent device {target!r}")
                visit(by_name[dep.device])
            visiting.discard(name)
            done[name] = entry

        for entry in self.devices:
            visit(entry)
        return list(done.values())


@dataclass(frozen=True)
class Catalog:
    devices: dict[str, DeviceSpec]
    systems: dict[str, TechnologicalSystem]

    def system(self, name: str) -> TechnologicalSystem:
        try:
            return self.systems[name]
        except KeyError:
            raise CatalogError(f"unknown technological system {name!r}") from None

    def with_devices(self, devices: dict[str, DeviceSpec]) -> "Catalog":
        """Copy with some device specs replaced; systems are re-linked."""
        merged = {**self.devices, **devices}
        systems = {
            name: replace(
                ts,
                devices=tuple(
                    DeviceEntry(merged[e.device.name], e.quantity) for e in ts.devices
                ),
            )
            for name, ts in self.systems.items()
        }
        return Catalog(merged, systems)


# -- validation ---------------------------------------------------------------

_NONROBOTIC = (DeviceKind.FIXED_PER_FARM, DeviceKind.CAPACITY_SCALED, DeviceKind.DEPENDENT)
_POWERS = ("active_power", "sleep_power", "travel_power")


def _device_violations(d: DeviceSpec) -> list[str]:
    out = []
    where = f"device {d.name!r}"
    for f in fields(DeviceSpec):
        v = getattr(d, f.name)
        if isinstance(v, float) and not math.isfinite(v):
            out.append(f"{where}: {f.name} is not finite")
    for p in _POWERS:
        if getattr(d, p) < 0:
            out.append(f"{where}: {p} must be >= 0")
    if not d.lifetime_years > 0:
        out.append(f"{where}: lifetime_years must be > 0")
    if d.embodied_ghg < 0:
        out.append(f"{where}: embodied_ghg must be >= 0")
    if not 0 <= d.allocation_fraction <= 1:
        out.append(f"{where}: allocation_fraction must lie in [0, 1]")
    for h in ("active_hours_per_day", "sleep_hours_per_day", "travel_hours_per_day"):
        if getattr(d, h) < 0:
            out.append(f"{where}: {h} must be >= 0")
    if d.kind in _NONROBOTIC and d.active_hours_per_day + d.sleep_hours_per_day > 24:
        out.append(f"{where}: active + sleep hours exceed 24 h/day")
    if d.kind in (DeviceKind.CAPACITY_SCALED, DeviceKind.ROBOTIC) and not d.capacity > 0:
        out.append(f"{where}: capacity must be > 0 for {d.kind.value} devices")
    if d.kind is DeviceKind.ROBOTIC:
        if d.use_periodicity_days < 1:
            out.append(f"{where}: use_periodicity_days must be >= 1")
        if d.passes_per_year < 1:
            out.append(f"{where}: passes_per_year must be >= 1")
        if not d.active_hours_per_day > 0:
            out.append(f"{where}: active_hours_per_day must be > 0 for robots")
        if d.active_hours_per_day + d.travel_hours_per_day > 24:
            out.append(f"{where}: active + travel hours exceed 24 h/day")
    if d.kind is DeviceKind.DEPENDENT:
        if d.depends_on is None:
            out.append(f"{where}: dependent device needs depends_on")
        elif not d.depends_on.ratio > 0:
            out.append(f"{where}: depends_on ratio must be > 0")
    return out


def validate_catalog(systems) -> list[str]:
    """Return every violation found in ``systems``; an empty list means valid.

    Accepts a :class:`Catalog` or an iterable of :class:`TechnologicalSystem`.
    """
    if isinstance(systems, Catalog):
        systems = list(systems.systems.values())
    violations: list[str] = []
    seen_devices: set[int] = set()
    for ts in systems:
        names = [e.device.name for e in ts.devices]
        for dup in sorted({n for n in names if names.count(n) > 1}):
            violations.append(f"system {ts.name!r}: device {dup!r} listed more than once")
        for entry in ts.devices:
            d = entry.device
            if id(d) not in seen_devices:
                seen_devices.add(id(d))
                violations.extend(_device_violations(d))
            if d.kind is DeviceKind.FIXED_PER_FARM and entry.quantity < 0:
                violations.append(f"system {ts.name!r}: negative quantity for {d.name!r}")
            if d.kind is not DeviceKind.FIXED_PER_FARM and entry.quantity != 1:
                violations.append(
                    f"system {ts.name!r}: quantity only applies to fixed_per_farm devices ({d.name!r})"
                )
            dep = d.depends_on
            if d.kind is DeviceKind.DEPENDENT and dep is not None and dep.device not in names:
                violations.append(
                    f"system {ts.name!r}: {d.name!r} depends on {dep.device!r}, which is not in the system"
                )
        if not violations:
            try:
                ts.ordered_entries()
            except CatalogError as exc:
                violations.append(str(exc))
    return violations


# -- configuration I/O --------------------------------------------------------

_DEVICE_FIELDS = {f.name for f in fields(DeviceSpec)}


def device_from_dict(raw: dict) -> DeviceSpec:
    unknown = set(raw) - _DEVICE_FIELDS
    if unknown:
        raise CatalogError(f"device {raw.get('name')!r}: unknown fields {sorted(unknown)}")
    if "name" not in raw or "kind" not in raw:
        raise CatalogError("device entries need 'name' and 'kind'")
    kwargs = dict(raw)
    for f in fields(DeviceSpec):
        if f.name in kwargs and f.type == "float":
            kwargs[f.name] = float(kwargs[f.name])
    dep = kwargs.get("depends_on")
    if dep is not None:
        kwargs["depends_on"] = Dependency(str(dep["device"]), float(dep.get("ratio", 1.0)))
    try:
        return DeviceSpec(**kwargs)
    except ValueError as exc:
        raise CatalogError(f"device {raw['name']!r}: {exc}") from None


def device_to_dict(d: DeviceSpec) -> dict:
    out = {"name": d.name, "kind": d.kind.value}
    for f in fields(DeviceSpec):
        if f.name in ("name", "kind"):
            continue
        v = getattr(d, f.name)
        if f.name == "depends_on":
            if v is not None:
                out["depends_on"] = {"device": v.device, "ratio": v.ratio}
        elif v is not None:
            out[f.name] = v
    return out


def catalog_from_dict(raw: dict) -> Catalog:
    if not isinstance(raw, dict):
        raise CatalogError("catalog must be a mapping with 'devices' and 'systems'")
    devices: dict[str, DeviceSpec] = {}
    for item in raw.get("devices") or []:
        d = device_from_dict(item)
        if d.name in devices:
            raise CatalogError(f"device {d.name!r} defined twice")
        devices[d.name] = d
    systems: dict[str, TechnologicalSystem] = {}
    for item in raw.get("systems") or []:
        name = item.get("name")
        if not name:
            raise CatalogError("system entries need a 'name'")
        entries = []
        for e in item.get("devices") or []:
            ref = e["device"] if isinstance(e, dict) else e
            if ref not in devices:
                raise CatalogError(f"system {name!r}: unknown device {ref!r}")
            qty = float(e.get("quantity", 1.0)) if isinstance(e, dict) else 1.0
            entries.append(DeviceEntry(devices[ref], qty))
        if name in systems:
            raise CatalogError(f"system {name!r} defined twice")
        systems[name] = TechnologicalSystem(name, tuple(entries), item.get("farming_tasks") or ())
    return Catalog(devices, systems)


def catalog_to_dict(catalog: Catalog) -> dict:
    return {
        "devices": [device_to_dict(d) for d in catalog.devices.values()],
        "systems": [
            {
                "name": ts.name,
                "farming_tasks": sorted(ts.farming_tasks),
                "devices": [
                    {"device": e.device.name, "quantity": e.quantity} for e in ts.devices
                ],
            }
            for ts in catalog.systems.values()
        ],
    }


def load_catalog(path: str | Path) -> Catalog:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    try:
        return catalog_from_dict(raw)
    except (KeyError, TypeError) as exc:
        raise CatalogError(f"{path}: malformed catalog ({exc})") from None


def dump_catalog(catalog: Catalog, path: str | Path | None = None) -> str:
    text = yaml.safe_dump(catalog_to_dict(catalog), sort_keys=False)
    if path is not None:
        Path(path).write_text(text)
    return text
