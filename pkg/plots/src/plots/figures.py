"""Render the four figure kinds from engine-emitted CSV tables.

This package is a read-only consumer of the engine's CSV contract; it never
recomputes statistics, only displays the emitted numbers.  Rendering is
deterministic: a pinned style, no timestamps, and a fixed SVG hash salt, so
identical input yields byte-identical output.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

KINDS = ("ecdf", "atoms", "ks", "discontinuity")

_STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "svg.hashsalt": "gpargmax-plots",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
}

# Required columns per kind; the ecdf law table additionally carries one
# `s<i>` column per coordinate, validated separately.
_SCHEMAS = {
    "ecdf": ("rep", "value", "on_boundary"),
    "atoms": ("coordinate", "location", "h", "mass", "stderr"),
    "ks": ("n", "ks"),
    "discontinuity": ("quantity", "estimate", "stderr"),
}


class SchemaError(ValueError):
    """Input CSV does not match the engine schema for the requested kind."""


@dataclass(frozen=True)
class FigureRequest:
    kind: str
    inputs: tuple
    output: Path
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    labels: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        if self.labels and len(self.labels) != len(self.inputs):
            raise ValueError("number of labels must match number of inputs")
        suffix = Path(self.output).suffix.lower()
        if suffix not in (".png", ".svg"):
            raise ValueError(f"unsupported output format {suffix!r}; use .png or .svg")


def _read_table(path, kind: str) -> dict:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected a header row") from None
        rows = list(reader)
    missing = [c for c in _SCHEMAS[kind] if c not in header]
    if missing:
        raise SchemaError(
            f"{path}: missing column(s) {', '.join(repr(c) for c in missing)} "
            f"required for kind {kind!r}"
        )
    return {c: [row[header.index(c)] for row in rows] for c in header}


def _law_coordinates(table: dict, path) -> list:
    coords = []
    i = 1
    while f"s{i}" in table:
        coords.append(np.asarray(table[f"s{i}"], dtype=float))
        i += 1
    if not coords:
        raise SchemaError(f"{path}: missing column(s) 's1' required for kind 'ecdf'")
    return coords


def _series_labels(req: FigureRequest) -> list:
    if req.labels:
        return list(req.labels)
    return [Path(p).stem for p in req.inputs]


def _draw_ecdf(ax, req: FigureRequest):
    for path, label in zip(req.inputs, _series_labels(req)):
        table = _read_table(path, "ecdf")
        coords = _law_coordinates(table, path)
        for j, draws in enumerate(coords):
            x = np.sort(draws)
            y = np.arange(1, x.size + 1) / x.size
            name = f"s{j + 1}" if len(req.inputs) == 1 else f"{label} s{j + 1}"
            ax.step(np.concatenate([[x[0]], x]), np.concatenate([[0.0], y]),
                    where="post", label=name)
    ax.set_xlabel(req.xlabel or "s")
    ax.set_ylabel(req.ylabel or "empirical CDF")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="lower right")


def _draw_atoms(ax, req: FigureRequest):
    for path, label in zip(req.inputs, _series_labels(req)):
        table = _read_table(path, "atoms")
        h = np.asarray(table["h"], dtype=float)
        mass = np.asarray(table["mass"], dtype=float)
        se = np.asarray(table["stderr"], dtype=float)
        ax.errorbar(h, mass, yerr=se, fmt="o", capsize=3, label=label)
        # slope-1 reference anchored at the coarsest level: the signature of
        # a continuous limit law is mass proportional to spacing
        ref = mass[0] * h / h[0]
        ax.plot(h, ref, "--", color="gray",
                label="slope-1 reference" if path == req.inputs[0] else None)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(req.xlabel or "lattice spacing h")
    ax.set_ylabel(req.ylabel or "atom mass")
    ax.legend(loc="upper left")


def _draw_ks(ax, req: FigureRequest):
    for path, label in zip(req.inputs, _series_labels(req)):
        table = _read_table(path, "ks")
        n = np.asarray(table["n"], dtype=float)
        ks = np.asarray(table["ks"], dtype=float)
        ax.plot(n, ks, "o-", label=label)
    ax.set_xscale("log")
    ax.set_xlabel(req.xlabel or "sample size n")
    ax.set_ylabel(req.ylabel or "KS distance to the limit law")
    ax.set_ylim(bottom=0)
    ax.legend(loc="upper right")


def _draw_discontinuity(ax, req: FigureRequest):
    order = ("p_neg", "p_zero", "p_pos")
    width = 0.8 / len(req.inputs)
    base = np.arange(len(order), dtype=float)
    for i, (path, label) in enumerate(zip(req.inputs, _series_labels(req))):
        table = _read_table(path, "discontinuity")
        by_name = dict(zip(table["quantity"], zip(table["estimate"], table["stderr"])))
        missing = [q for q in order if q not in by_name]
        if missing:
            raise SchemaError(
                f"{path}: missing row(s) {', '.join(repr(q) for q in missing)} "
                f"required for kind 'discontinuity'"
            )
        est = [float(by_name[q][0]) for q in order]
        se = [float(by_name[q][1]) for q in order]
        ax.bar(base + i * width, est, width=width, yerr=se, capsize=4, label=label)
    ax.axhline(0.5, linestyle="--", color="gray", label="1/2 bound")
    ax.set_xticks(base + (len(req.inputs) - 1) * width / 2)
    ax.set_xticklabels(order)
    ax.set_ylabel(req.ylabel or "argmax sign probability")
    ax.set_ylim(0, 1)
    ax.legend(loc="upper right")


_DRAWERS = {
    "ecdf": _draw_ecdf,
    "atoms": _draw_atoms,
    "ks": _draw_ks,
    "discontinuity": _draw_discontinuity,
}


def render(req: FigureRequest) -> Path:
    """Write the requested figure and return its path."""
    out = Path(req.output)
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        try:
            _DRAWERS[req.kind](ax, req)
            if req.title:
                ax.set_title(req.title)
            fig.tight_layout()
            # drop volatile metadata so identical input gives identical bytes
            metadata = {"Date": None} if out.suffix.lower() == ".svg" else {}
            fig.savefig(out, metadata=metadata)
        finally:
            plt.close(fig)
    return out
