"""Delimited-text output tables.

Numbers are written with six significant digits; every header names its unit.
"""
from __future__ import annotations

import csv
from pathlib import Path

from .impact import AssessmentResult, EfficiencyPoint, Totals

MASS = "kgCO2e_per_year"
ENERGY = "kWh_per_year"


def fmt(x: float) -> str:
    return f"{x:.6g}"


class TableWriter:
    def __init__(self, out_dir: Path, delimiter: str = ","):
        self.out_dir = Path(out_dir)
        self.delimiter = delimiter
        self.ext = "tsv" if delimiter == "\t" else "csv"
        self.written: list[Path] = []

    def path(self, stem: str) -> Path:
        return self.out_dir / f"{stem}.{self.ext}"

    def write(self, stem: str, header, rows) -> Path:
        p = self.path(stem)
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, delimiter=self.delimiter, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
        self.written.append(p)
        return p

    def track(self, stem: str) -> Path:
        p = self.path(stem)
        self.written.append(p)
        return p


def _totals_cols(t: Totals):
    return [t.embodied, t.use, t.total, t.energy_kwh]


TOTALS_HEADER = [f"embodied_{MASS}", f"use_{MASS}", f"total_{MASS}", f"energy_{ENERGY}"]


def write_assessment(tw: TableWriter, result: AssessmentResult, scenario: str):
    unit = result.size_unit.value
    tw.write("totals", ["scenario", *TOTALS_HEADER], [[scenario, *_totals_cols(result.totals)]])
    for axis, label in (("device", "device"), ("ts", "ts"), ("size", f"size_{unit}")):
        rows = [
            [fmt(k) if axis == "size" else k, *_totals_cols(t)]
            for k, t in result.breakdown(axis).items()
        ]
        tw.write(f"breakdown_{axis}", [label, *TOTALS_HEADER], rows)


def write_efficiency(tw: TableWriter, points: list[EfficiencyPoint], size_unit: str):
    per = "head" if size_unit == "heads" else "ha"
    tw.write(
        "efficiency",
        [f"size_{size_unit}", f"total_{MASS}_per_{per}", f"use_{MASS}_per_{per}", f"energy_{ENERGY}_per_{per}"],
        [[fmt(p.size), p.total_per_unit, p.use_per_unit, p.energy_kwh_per_unit] for p in points],
    )
