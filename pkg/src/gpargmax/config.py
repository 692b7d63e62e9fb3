"""Experiment config parsing and validation (TOML front end).

Validation errors name the offending field path so a malformed config is
diagnosable without reading the source.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from . import kernels
from .estimators import ERMDGP, MaxScoreDGP, ThreshRegDGP
from .simulate import build_lattice

__all__ = [
    "ConfigError",
    "config_hash",
    "mean_from_config",
    "cov_from_config",
    "atoms_from_config",
    "lattice_from_config",
    "dgp_from_config",
    "require",
]

KINDS = (
    "check-kernel",
    "simulate",
    "continuity",
    "discontinuity-example",
    "rkhs-verify",
    "estimator-mc",
    "ci-experiment",
)


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"config field {path!r}: {message}")
        self.path = path


def require(tbl: dict, key: str, where: str, default=None, required: bool = True):
    if key not in tbl:
        if required and default is None:
            raise ConfigError(f"{where}.{key}", "missing required field")
        return default
    return tbl[key]


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def atoms_from_config(entries, where: str):
    atoms = []
    for i, tbl in enumerate(entries):
        try:
            atoms.append(
                kernels.MixtureAtom(
                    w=float(require(tbl, "w", f"{where}[{i}]")),
                    x=require(tbl, "x", f"{where}[{i}]"),
                    f=float(require(tbl, "f", f"{where}[{i}]")),
                    a=float(tbl.get("a", 1.0)),
                    fu=float(tbl.get("fu", 0.0)),
                    b=float(tbl.get("b", 0.0)),
                )
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{where}[{i}]", str(exc)) from exc
    try:
        kernels._check_atoms(atoms)
    except ValueError as exc:
        raise ConfigError(where, str(exc)) from exc
    return tuple(atoms)


def mean_from_config(tbl: dict, where: str = "mean"):
    variant = require(tbl, "variant", where)
    try:
        if variant == "quadratic":
            return kernels.Quadratic(np.asarray(require(tbl, "V", where), dtype=float))
        if variant == "separable_quadratic":
            return kernels.SeparableQuadratic(require(tbl, "kappa", where))
        if variant == "threshreg_abs":
            return kernels.ThreshRegAbs(atoms_from_config(require(tbl, "atoms", where), f"{where}.atoms"))
        if variant == "power":
            return kernels.PowerMean(float(require(tbl, "c", where)), float(require(tbl, "gamma", where)))
        if variant == "piecewise_power":
            return kernels.PiecewisePowerMean(
                float(require(tbl, "c", where)), float(require(tbl, "gamma", where))
            )
        if variant == "linear":
            return kernels.Linear(require(tbl, "g", where))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(where, str(exc)) from exc
    raise ConfigError(f"{where}.variant", f"unknown mean variant {variant!r}")


def cov_from_config(tbl: dict, where: str = "cov"):
    variant = require(tbl, "variant", where)
    try:
        if variant == "scaled_bm_1d":
            return kernels.ScaledBM1d(float(require(tbl, "sigma2", where)))
        if variant == "bilinear":
            return kernels.Bilinear(np.asarray(require(tbl, "Sigma", where), dtype=float))
        if variant == "mixture_bm":
            return kernels.MixtureBM(atoms_from_config(require(tbl, "atoms", where), f"{where}.atoms"))
        if variant == "separable_bm":
            return kernels.SeparableBM(require(tbl, "f", where))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(where, str(exc)) from exc
    raise ConfigError(f"{where}.variant", f"unknown covariance variant {variant!r}")


def lattice_from_config(tbl: dict, where: str = "lattice"):
    try:
        return build_lattice(
            int(require(tbl, "d", where)),
            float(require(tbl, "N", where)),
            int(require(tbl, "ppu", where)),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(where, str(exc)) from exc


def dgp_from_config(tbl: dict, where: str = "dgp"):
    model = require(tbl, "model", where)
    try:
        if model == "maxscore":
            return MaxScoreDGP(
                theta0=require(tbl, "theta0", where),
                x_atoms=tuple(
                    (float(a["p"]), a["x"]) for a in require(tbl, "x_atoms", where)
                ),
                w_sigma=float(tbl.get("w_sigma", 1.0)),
                u_sigma=float(tbl.get("u_sigma", 1.0)),
            )
        if model == "erm":
            return ERMDGP(theta0=require(tbl, "theta0", where))
        if model == "threshreg":
            return ThreshRegDGP(
                beta0=require(tbl, "beta0", where),
                delta_bar=require(tbl, "delta_bar", where),
                theta0=require(tbl, "theta0", where),
                x_atoms=tuple((float(a["p"]), a["x"]) for a in require(tbl, "x_atoms", where)),
                w_atoms=tuple((float(a["p"]), a["w"]) for a in require(tbl, "w_atoms", where)),
                a_rate=float(tbl.get("a_rate", 0.25)),
                q_sigma=float(tbl.get("q_sigma", 1.0)),
                u_sigma=float(tbl.get("u_sigma", 1.0)),
            )
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(where, str(exc)) from exc
    raise ConfigError(f"{where}.model", f"unknown estimator model {model!r}")
