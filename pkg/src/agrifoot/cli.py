"""Command-line front-end.

    agrifoot run SCENARIO.yaml [--out DIR] [--seed N] [--threads N] [--format csv|tsv]
    agrifoot compare A.yaml B.yaml ... [--out DIR]
    agrifoot validate SCENARIO.yaml

Exit codes: 0 success, 1 configuration or usage error, 2 engine error,
3 too many failed Monte Carlo samples.  ``AGRIFOOT_OUT`` overrides the output
directory named in the scenario; ``--out`` overrides both.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import os
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

from .allocation import AllocationProfile, CoverageGapError, allocation_table, coverage_gaps
from .catalog import CatalogError, validate_catalog
from .config import ConfigError, ScenarioConfig, load_scenario, read_yaml
from .distribution import DistributionError, average_size, total_farms, total_size
from .impact import (
    AssessmentResult, Totals, assess, assess_average_baseline, efficiency_curve,
    thermal_baseline,
)
from .inventory import FeasibilityWarning, InventoryError, build_inventory
from .report import MASS, TableWriter, fmt, write_assessment, write_efficiency
from .sensitivity import SensitivityAbort, run_sensitivity, summarize, write_summary

OUT_ENV = "AGRIFOOT_OUT"

EXIT_OK, EXIT_CONFIG, EXIT_ENGINE, EXIT_SENSITIVITY = 0, 1, 2, 3

ENGINE_ERRORS = (InventoryError, CoverageGapError, CatalogError, DistributionError, ArithmeticError)


@dataclass
class RunOutcome:
    config: ScenarioConfig
    result: AssessmentResult
    baseline: Totals
    files: list[Path]


def _with_seed(cfg: ScenarioConfig, seed: int | None) -> ScenarioConfig:
    if seed is None:
        return cfg
    sens = cfg.sensitivity
    if sens is not None:
        sens = dataclasses.replace(sens, spec=dataclasses.replace(sens.spec, seed=seed))
    return dataclasses.replace(cfg, seed=seed, sensitivity=sens)


def resolve_out_dir(cfg: ScenarioConfig, flag: str | None) -> Path:
    if flag:
        return Path(flag)
    env = os.environ.get(OUT_ENV)
    if env:
        return Path(env) / cfg.name
    if cfg.output_dir is not None:
        return cfg.output_dir
    return Path("out") / cfg.name


def assess_scenario(cfg: ScenarioConfig) -> tuple[AssessmentResult, Totals]:
    inventory = build_inventory(cfg.catalog, cfg.profile, cfg.distribution)
    result = assess(inventory, cfg.grid)
    baseline = assess_average_baseline(cfg.catalog, cfg.profile, cfg.distribution, cfg.grid)
    return result, baseline


def run_scenario(
    cfg: ScenarioConfig, out_dir: Path, delimiter: str = ",", threads: int = 1
) -> RunOutcome:
    out_dir.mkdir(parents=True, exist_ok=True)
    tw = TableWriter(out_dir, delimiter)
    dist = cfg.distribution
    unit = dist.size_unit.value

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", FeasibilityWarning)
        inventory = build_inventory(cfg.catalog, cfg.profile, dist)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    inventory.write(tw.track("inventory"), delimiter)

    result = assess(inventory, cfg.grid)
    write_assessment(tw, result, cfg.name)
    write_efficiency(tw, efficiency_curve(result, dist), unit)
    allocation_table(cfg.profile, dist).write(tw.track("allocation"), delimiter, f"size_{unit}")

    baseline = assess_average_baseline(cfg.catalog, cfg.profile, dist, cfg.grid)
    rows = [_baseline_row("scenario", result.totals.total, baseline.total)]
    if cfg.full_deployment is None:
        for ts in cfg.profile.ts_names:
            exact = assess(build_inventory(cfg.catalog, AllocationProfile.full_deployment(ts), dist), cfg.grid).totals.total
            approx = assess_average_baseline(cfg.catalog, ts, dist, cfg.grid).total
            rows.append(_baseline_row(f"full:{ts}", exact, approx))
    tw.write(
        "baseline",
        ["scope", f"distribution_total_{MASS}", f"average_baseline_total_{MASS}", "relative_gap"],
        rows,
    )

    if cfg.thermal is not None:
        surface = cfg.thermal.surface_ha if cfg.thermal.surface_ha is not None else total_size(dist)
        thermal = thermal_baseline(surface, cfg.thermal.passes, cfg.thermal.emission_factor)
        tw.write(
            "thermal",
            ["surface_ha", f"thermal_{MASS}", f"scenario_total_{MASS}", "scenario_to_thermal_ratio"],
            [[surface, thermal, result.totals.total, result.totals.total / thermal if thermal else math.nan]],
        )

    if cfg.sensitivity is not None:
        s = cfg.sensitivity
        target = cfg.profile if s.mode == "scenario" else list(s.systems)
        sens = run_sensitivity(cfg.catalog, target, dist, cfg.grid, s.spec, threads=threads)
        sens.write_samples(tw.track("sensitivity_samples"), delimiter)
        write_summary(summarize(sens), tw.track("sensitivity_summary"), delimiter)
        if sens.failures:
            print(f"warning: {len(sens.failures)} Monte Carlo samples failed", file=sys.stderr)

    return RunOutcome(cfg, result, baseline, tw.written)


def _baseline_row(scope, exact, approx):
    return [scope, exact, approx, (approx - exact) / exact if exact else math.nan]


def print_summary(outcome: RunOutcome, out=None):
    out = out or sys.stdout
    cfg, t = outcome.config, outcome.result.totals
    dist = cfg.distribution
    print(f"scenario   {cfg.name}", file=out)
    print(
        f"farms      {total_farms(dist):,.0f} over {len(dist)} sizes "
        f"(mean {average_size(dist):.4g} {dist.size_unit.value})",
        file=out,
    )
    print(f"grid       {cfg.grid.name} {cfg.grid.intensity:g} gCO2e/kWh", file=out)
    print(f"energy     {t.energy_kwh:.6g} kWh/year", file=out)
    print(f"embodied   {t.embodied:.6g} kgCO2e/year", file=out)
    print(f"use        {t.use:.6g} kgCO2e/year", file=out)
    print(f"total      {t.total:.6g} kgCO2e/year ({t.total / 1e9:.4g} Mt)", file=out)
    gap = (outcome.baseline.total - t.total) / t.total if t.total else math.nan
    print(f"average    {outcome.baseline.total:.6g} kgCO2e/year ({gap:+.2%} vs distribution)", file=out)
    for label, totals in outcome.result.breakdown("ts").items():
        print(f"  {label:<20} {totals.total:.6g} kgCO2e/year", file=out)
    print(f"outputs    {len(outcome.files)} files", file=out)


def compare_table(configs: list[ScenarioConfig]):
    """Header and rows of the side-by-side comparison of scenarios."""
    units = {c.distribution.size_unit for c in configs}
    if len(units) > 1:
        raise ConfigError(
            ", ".join(str(c.path) for c in configs), "size_unit",
            "scenarios compare only with identical size units",
        )
    results = [assess_scenario(c) for c in configs]
    header = ["metric", *(c.name for c in configs)]
    rows = [
        [f"total_{MASS}", *(r.totals.total for r, _ in results)],
        [f"embodied_{MASS}", *(r.totals.embodied for r, _ in results)],
        [f"use_{MASS}", *(r.totals.use for r, _ in results)],
        ["energy_kWh_per_year", *(r.totals.energy_kwh for r, _ in results)],
        [f"average_baseline_total_{MASS}", *(b.total for _, b in results)],
    ]
    devices = sorted({d for r, _ in results for d in r.breakdown("device")})
    for d in devices:
        cols = []
        for r, _ in results:
            t = r.breakdown("device").get(d)
            cols.append(t.total if t is not None else 0.0)
        rows.append([f"{d}_total_{MASS}", *cols])
    return header, rows


def validate_report(path) -> list[str]:
    """Problems found without running the assessment; empty when valid."""
    path = Path(path)
    problems = []
    try:
        raw = read_yaml(path)
    except ConfigError as exc:
        return [str(exc)]
    both = "profile" in raw and "full_deployment" in raw
    if both:
        problems.append(f"{path}: profile/full_deployment: both present, they are mutually exclusive")
    try:
        cfg = load_scenario(path)
    except ConfigError as exc:
        if not (both and exc.where == "profile/full_deployment"):
            problems.append(str(exc))
        return problems
    except DistributionError as exc:
        return problems + [f"{path}: distribution: {exc}"]
    problems.extend(f"{path}: catalog: {p}" for p in validate_catalog(cfg.catalog))
    gaps = coverage_gaps(cfg.profile, cfg.distribution.sizes)
    if gaps:
        problems.append(f"{path}: profile: {CoverageGapError(gaps, cfg.profile.supports())}")
    return problems


# -- argument parsing ---------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="agrifoot", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="override the scenario seed (unsigned 64-bit)")
        p.add_argument("--threads", type=int, default=1, help="Monte Carlo worker threads")
        p.add_argument("--format", choices=("csv", "tsv"), default="csv")

    p_run = sub.add_parser("run", help="assess one scenario and write its tables")
    p_run.add_argument("config")
    common(p_run)
    p_cmp = sub.add_parser("compare", help="side-by-side totals of several scenarios")
    p_cmp.add_argument("configs", nargs="*")
    common(p_cmp)
    p_val = sub.add_parser("validate", help="check a scenario without computing it")
    p_val.add_argument("config")
    return parser


def _cmd_run(args) -> int:
    cfg = _with_seed(load_scenario(args.config), args.seed)
    out_dir = resolve_out_dir(cfg, args.out)
    delim = "\t" if args.format == "tsv" else ","
    outcome = run_scenario(cfg, out_dir, delim, max(1, args.threads))
    print_summary(outcome)
    return EXIT_OK


def _cmd_compare(args, parser) -> int:
    if len(args.configs) < 2:
        parser.error("compare needs at least two scenario files")
    configs = [_with_seed(load_scenario(p), args.seed) for p in args.configs]
    header, rows = compare_table(configs)
    delim = "\t" if args.format == "tsv" else ","
    w = csv.writer(sys.stdout, delimiter=delim, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        TableWriter(out, delim).write("compare", header, rows)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "validate":
            problems = validate_report(args.config)
            for p in problems:
                print(p)
            if not problems:
                print("OK")
            return EXIT_OK if not problems else EXIT_CONFIG
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_compare(args, parser)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SensitivityAbort as exc:
        print(f"sensitivity error: {exc}", file=sys.stderr)
        return EXIT_SENSITIVITY
    except ENGINE_ERRORS as exc:
        print(f"engine error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ENGINE


if __name__ == "__main__":
    sys.exit(main())
