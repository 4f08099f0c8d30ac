"""Scenario configuration files (YAML).

Paths inside a scenario are resolved relative to the scenario file.  Example::

    name: crop_mixed
    size_unit: hectares
    distribution:
      coarse: {bin_edges: [...], bin_counts: [...], target_total_farms: 65223,
               target_total_size: 7358412, step: 1}
      min_size: 20
    catalog: ../crop_catalog.yaml
    profile:
      - {ts: TS_BR, a: 0, b: 130, w: 1}
      - {ts: TS_IR, a: 110, b: 1000, w: 1}
    grid: {name: FR, intensity: 68}
    seed: 7
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .allocation import AllocationProfile
from .catalog import Catalog, CatalogError, load_catalog
from .distribution import (
    CoarseBinSpec, DistributionError, FarmSizeDistribution, ReconstructionError,
    SizeUnit, densify, read_distribution_csv,
)
from .impact import FR_GRID, GridIntensity
from .sensitivity import DEFAULT_RSD, PerturbationSpec

_TOP_LEVEL = {
    "name", "use_case", "size_unit", "distribution", "catalog", "profile",
    "full_deployment", "grid", "seed", "sensitivity", "thermal_baseline", "output_dir",
}
_COARSE_FIELDS = {"bin_edges", "bin_counts", "target_total_farms", "target_total_size", "step"}


class ConfigError(ValueError):
    def __init__(self, source, where: str, message: str):
        self.source = str(source)
        self.where = where
        super().__init__(f"{source}: {where}: {message}")


@dataclass(frozen=True)
class SensitivityConfig:
    spec: PerturbationSpec
    mode: str = "scenario"  # or "each_system"
    systems: tuple[str, ...] = ()


@dataclass(frozen=True)
class ThermalConfig:
    passes: tuple[tuple[str, float], ...]
    emission_factor: float
    surface_ha: float | None = None  # None: total size of the distribution


@dataclass
class ScenarioConfig:
    path: Path
    name: str
    use_case: str
    distribution: FarmSizeDistribution
    catalog: Catalog
    profile: AllocationProfile
    full_deployment: str | None
    grid: GridIntensity
    seed: int = 0
    sensitivity: SensitivityConfig | None = None
    thermal: ThermalConfig | None = None
    output_dir: Path | None = None
    raw: dict = field(default_factory=dict, repr=False)


def read_yaml(path: Path) -> dict:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(path, "<file>", "not found") from None
    except yaml.YAMLError as exc:
        raise ConfigError(path, "<file>", f"invalid YAML ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(path, "<file>", "top level must be a mapping")
    return raw


def _num(path, where, value, *, positive=False, integer=False):
    try:
        out = int(value) if integer else float(value)
    except (TypeError, ValueError):
        raise ConfigError(path, where, f"expected a number, got {value!r}") from None
    if integer and out != value:
        raise ConfigError(path, where, f"expected an integer, got {value!r}")
    if positive and not out > 0:
        raise ConfigError(path, where, f"must be > 0, got {value!r}")
    return out


def _distribution(path: Path, raw, unit: SizeUnit) -> FarmSizeDistribution:
    if not isinstance(raw, dict):
        raise ConfigError(path, "distribution", "expected a mapping with file, table or coarse")
    sources = [k for k in ("file", "table", "coarse") if k in raw]
    if len(sources) != 1:
        raise ConfigError(path, "distribution", "give exactly one of file, table, coarse")
    src = sources[0]
    try:
        if src == "file":
            f = path.parent / raw["file"]
            if not f.exists():
                raise ConfigError(path, "distribution.file", f"{f} does not exist")
            dist = read_distribution_csv(f, unit)
        elif src == "table":
            rows = raw["table"]
            if not isinstance(rows, list) or not rows:
                raise ConfigError(path, "distribution.table", "expected a list of {size, count}")
            pairs = sorted(
                (_num(path, f"distribution.table[{i}].size", r.get("size")),
                 _num(path, f"distribution.table[{i}].count", r.get("count")))
                for i, r in enumerate(rows)
            )
            dist = FarmSizeDistribution(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs), unit)
        else:
            c = raw["coarse"]
            if not isinstance(c, dict):
                raise ConfigError(path, "distribution.coarse", "expected a mapping")
            unknown = set(c) - _COARSE_FIELDS
            missing = _COARSE_FIELDS - {"step"} - set(c)
            if unknown or missing:
                raise ConfigError(
                    path, "distribution.coarse",
                    f"unknown fields {sorted(unknown)}, missing {sorted(missing)}",
                )
            spec = CoarseBinSpec(
                tuple(c["bin_edges"]), tuple(c["bin_counts"]),
                _num(path, "distribution.coarse.target_total_farms", c["target_total_farms"]),
                _num(path, "distribution.coarse.target_total_size", c["target_total_size"]),
            )
            step = _num(path, "distribution.coarse.step", c.get("step", 1.0), positive=True)
            dist = densify(spec, step, unit)
    except ReconstructionError:
        raise
    except DistributionError as exc:
        raise ConfigError(path, f"distribution.{src}", str(exc)) from None
    lo, hi = raw.get("min_size"), raw.get("max_size")
    if lo is not None or hi is not None:
        dist = dist.filtered(
            None if lo is None else _num(path, "distribution.min_size", lo),
            None if hi is None else _num(path, "distribution.max_size", hi),
        )
    if len(dist) == 0:
        raise ConfigError(path, "distribution", "no farm sizes left after filtering")
    return dist


def _profile(path: Path, raw: dict, catalog: Catalog):
    has_p, has_f = "profile" in raw, "full_deployment" in raw
    if has_p == has_f:
        raise ConfigError(
            path, "profile/full_deployment", "exactly one of profile and full_deployment is required"
        )
    if has_f:
        ts = raw["full_deployment"]
        if ts not in catalog.systems:
            raise ConfigError(path, "full_deployment", f"unknown system {ts!r}")
        return AllocationProfile.full_deployment(ts), ts
    entries = raw["profile"]
    if not isinstance(entries, list) or not entries:
        raise ConfigError(path, "profile", "expected a non-empty list of {ts, a, b, w}")
    for i, e in enumerate(entries):
        if not isinstance(e, dict) or not {"ts", "a", "b", "w"} <= set(e):
            raise ConfigError(path, f"profile[{i}]", "needs ts, a, b and w")
        if e["ts"] not in catalog.systems:
            raise ConfigError(path, f"profile[{i}].ts", f"unknown system {e['ts']!r}")
    try:
        return AllocationProfile.from_records(entries), None
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, "profile", str(exc)) from None


def _sensitivity(path: Path, raw, seed: int, catalog: Catalog) -> SensitivityConfig:
    if not isinstance(raw, dict):
        raise ConfigError(path, "sensitivity", "expected a mapping")
    rsd = raw.get("relative_std", {})
    if isinstance(rsd, (int, float)):
        params = {p: float(rsd) for p in ("capacity", "lifetime_years", "active_power", "solar_daily_supplement")}
    elif isinstance(rsd, dict):
        params = {k: _num(path, f"sensitivity.relative_std.{k}", v, positive=True) for k, v in rsd.items()}
        if not params:
            params = {p: DEFAULT_RSD for p in ("capacity", "lifetime_years", "active_power", "solar_daily_supplement")}
    else:
        raise ConfigError(path, "sensitivity.relative_std", "expected a number or a mapping")
    if raw.get("vary_travel_power", False):
        params.setdefault("travel_power", params.get("active_power", DEFAULT_RSD))
    mode = raw.get("mode", "scenario")
    if mode not in ("scenario", "each_system"):
        raise ConfigError(path, "sensitivity.mode", "expected 'scenario' or 'each_system'")
    systems = tuple(raw.get("systems") or (catalog.systems if mode == "each_system" else ()))
    for s in systems:
        if s not in catalog.systems:
            raise ConfigError(path, "sensitivity.systems", f"unknown system {s!r}")
    try:
        spec = PerturbationSpec(
            lognormal_params=params,
            periodicity_jitter_days=_num(
                path, "sensitivity.periodicity_jitter_days", raw.get("periodicity_jitter_days", 1), integer=True
            ),
            samples=_num(path, "sensitivity.samples", raw.get("samples", 10_000), integer=True),
            seed=seed,
            centre=raw.get("centre", "median"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(path, "sensitivity", str(exc)) from None
    return SensitivityConfig(spec, mode, systems)


def _thermal(path: Path, raw) -> ThermalConfig:
    if not isinstance(raw, dict) or "passes" not in raw or "emission_factor" not in raw:
        raise ConfigError(path, "thermal_baseline", "needs passes and emission_factor")
    passes = []
    for i, p in enumerate(raw["passes"]):
        passes.append(
            (str(p.get("operation", f"pass_{i}")),
             _num(path, f"thermal_baseline.passes[{i}].litres_per_ha", p.get("litres_per_ha")))
        )
    surface = raw.get("surface_ha")
    return ThermalConfig(
        tuple(passes),
        _num(path, "thermal_baseline.emission_factor", raw["emission_factor"]),
        None if surface in (None, "from_distribution") else _num(path, "thermal_baseline.surface_ha", surface),
    )


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    raw = read_yaml(path)
    unknown = set(raw) - _TOP_LEVEL
    if unknown:
        raise ConfigError(path, ", ".join(sorted(unknown)), "unknown field(s)")
    for key in ("distribution", "catalog"):
        if key not in raw:
            raise ConfigError(path, key, "missing")
    try:
        unit = SizeUnit(raw.get("size_unit", "hectares"))
    except ValueError:
        raise ConfigError(path, "size_unit", "expected 'heads' or 'hectares'") from None

    cat_path = path.parent / raw["catalog"]
    if not cat_path.exists():
        raise ConfigError(path, "catalog", f"{cat_path} does not exist")
    try:
        catalog = load_catalog(cat_path)
    except CatalogError as exc:
        raise ConfigError(path, "catalog", str(exc)) from None
    except yaml.YAMLError as exc:
        raise ConfigError(path, "catalog", f"invalid YAML ({exc})") from None

    dist = _distribution(path, raw["distribution"], unit)
    profile, full = _profile(path, raw, catalog)

    grid_raw = raw.get("grid")
    if grid_raw is None:
        grid = FR_GRID
    elif isinstance(grid_raw, dict) and "intensity" in grid_raw:
        intensity = _num(path, "grid.intensity", grid_raw["intensity"], positive=True)
        grid = GridIntensity(str(grid_raw.get("name", "custom")), intensity)
    else:
        raise ConfigError(path, "grid", "expected {name, intensity}")

    seed = _num(path, "seed", raw.get("seed", 0), integer=True)
    if not 0 <= seed < 2**64:
        raise ConfigError(path, "seed", "must be an unsigned 64-bit integer")
    sens = _sensitivity(path, raw["sensitivity"], seed, catalog) if raw.get("sensitivity") else None
    thermal = _thermal(path, raw["thermal_baseline"]) if raw.get("thermal_baseline") else None
    out = raw.get("output_dir")
    return ScenarioConfig(
        path=path,
        name=str(raw.get("name", path.stem)),
        use_case=str(raw.get("use_case", "")),
        distribution=dist,
        catalog=catalog,
        profile=profile,
        full_deployment=full,
        grid=grid,
        seed=seed,
        sensitivity=sens,
        thermal=thermal,
        output_dir=None if out is None else path.parent / out,
        raw=raw,
    )
