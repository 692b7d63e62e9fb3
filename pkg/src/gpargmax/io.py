"""CSV and JSON persistence for laws, profiles, and reports.

All CSVs use comma delimiters, '.' decimals, LF line endings, UTF-8, and
a mandatory header row.  Empirical laws carry a JSON sidecar with the
provenance (spec hash, seed, lattice).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .diagnostics import AtomProfile, DiscontinuityReport
from .simulate import EmpiricalLaw

__all__ = [
    "save_law",
    "load_law",
    "save_atom_profile",
    "save_discontinuity_report",
    "save_table",
    "sidecar_path",
]


def sidecar_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + ".meta.json")


def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def save_law(law: EmpiricalLaw, csv_path, meta: dict | None = None) -> None:
    """One row per draw: rep, s1..sd, value, on_boundary; sidecar JSON."""
    header = ["rep"] + [f"s{i + 1}" for i in range(law.d)] + ["value", "on_boundary"]
    rows = (
        [r, *(repr(float(v)) for v in law.draws[r]), repr(float(law.values[r])), int(law.on_boundary[r])]
        for r in range(law.replications)
    )
    _write_rows(csv_path, header, rows)
    sidecar = {
        "master_seed": law.master_seed,
        "replications": law.replications,
        "boundary_fraction": law.boundary_fraction,
        "dimension": law.d,
    }
    if meta:
        sidecar.update(meta)
    with open(sidecar_path(csv_path), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_law(csv_path) -> EmpiricalLaw:
    with open(csv_path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        d = len(header) - 3
        draws, values, bd = [], [], []
        for row in reader:
            draws.append([float(v) for v in row[1 : 1 + d]])
            values.append(float(row[1 + d]))
            bd.append(bool(int(row[2 + d])))
    meta_file = sidecar_path(csv_path)
    seed = 0
    if meta_file.exists():
        seed = json.loads(meta_file.read_text()).get("master_seed", 0)
    draws = np.asarray(draws)
    return EmpiricalLaw(draws, np.asarray(values), np.asarray(bd, dtype=bool), seed, draws.shape[0])


def save_atom_profile(profile: AtomProfile, csv_path) -> None:
    header = ["coordinate", "location", "h", "mass", "stderr"]
    rows = [
        [profile.coordinate, repr(profile.location), repr(h), repr(mass), repr(se)]
        for h, mass, se in profile.levels
    ]
    _write_rows(csv_path, header, rows)


def save_discontinuity_report(report: DiscontinuityReport, csv_path) -> None:
    header = ["quantity", "estimate", "stderr"]
    rows = [
        ["p_neg", repr(report.p_neg), repr(report.se_neg)],
        ["p_zero", repr(report.p_zero), repr(report.se_zero)],
        ["p_pos", repr(report.p_pos), repr(report.se_pos)],
    ]
    _write_rows(csv_path, header, rows)


def save_table(rows: list[dict], csv_path) -> None:
    """Generic table writer; columns from the first row's keys, in order."""
    if not rows:
        raise ValueError("cannot write an empty table")
    header = list(rows[0].keys())
    out = [[_fmt(row[k]) for k in header] for row in rows]
    _write_rows(csv_path, header, out)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(repr(float(x)) for x in np.asarray(v).ravel())
    return v
