"""Batch experiment runner.

`gpargmax run --config exp.toml --out results/` dispatches one experiment
and persists a `summary.json` (verdicts, KS values, atom masses, calibrated
constants) plus per-table CSVs.  Exit status 0 means every asserted check
passed, 2 means inconclusive (numerical error too large to decide), 1 means
failure.  `gpargmax list-experiments` prints the bundled golden configs.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from importlib import resources

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import numpy as np

from . import diagnostics, estimators, io, kernels, rkhs, simulate
from .config import (
    KINDS,
    ConfigError,
    atoms_from_config,
    config_hash,
    cov_from_config,
    dgp_from_config,
    lattice_from_config,
    mean_from_config,
    require,
)
from .rng import RngPolicy

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# Experiment handlers: each returns (verdicts, results, tables)
# ---------------------------------------------------------------------------


def _verdict(passed: bool, **detail):
    return {"passed": bool(passed), **detail}


def _run_check_kernel(cfg, rngp, tol_scale):
    k = cov_from_config(require(cfg, "cov", "config"))
    params = cfg.get("params", {})
    n = int(params.get("n_triples", 1000))
    tol = float(params.get("tol", 1e-10)) * tol_scale
    H = float(params.get("H", 1.0 if isinstance(k, kernels.Bilinear) else 0.5))
    rng = rngp.substream(0)
    worst_shift, worst_self = 0.0, 0.0
    shift_ok = True
    for _ in range(n):
        h, s, t = rng.uniform(-3, 3, size=(3, k.d))
        if not np.any(h):
            continue
        res = kernels.check_shift_equivariance(k, h, s, t, tol)
        shift_ok &= res.passed
        worst_shift = max(worst_shift, res.residual)
        res = kernels.check_self_similarity(k, float(rng.uniform(0.1, 5.0)), s, t, H, tol)
        worst_self = max(worst_self, res.residual)
    verdicts = {
        "shift_equivariance": _verdict(shift_ok and worst_shift <= tol, residual=worst_shift, tol=tol),
        "self_similarity": _verdict(worst_self <= tol, residual=worst_self, H=H, tol=tol),
    }
    results = {"worst_shift_residual": worst_shift, "worst_self_similarity_residual": worst_self}
    if "mean" in cfg:
        m = mean_from_config(cfg["mean"])
        eps = float(params.get("eps", 1.5))
        dirs = rng.standard_normal((16, m.d))
        tail = kernels.check_mean_tail(m, H, eps, [1.0, 10.0, 100.0], dirs)
        expect_fail = bool(params.get("expect_tail_failure", False))
        verdicts["mean_tail"] = _verdict(tail.passed != expect_fail, **tail.detail)
        results["mean_tail_eta"] = tail.detail["eta"]
    return verdicts, results, {}


def _run_simulate(cfg, rngp, tol_scale):
    k = cov_from_config(require(cfg, "cov", "config"))
    m = mean_from_config(cfg["mean"]) if "mean" in cfg else None
    lat = lattice_from_config(require(cfg, "lattice", "config"))
    params = cfg.get("params", {})
    R = int(params.get("replications", 10_000))
    law = simulate.mc_argmax(
        k, m, lat, R, rngp.child(0),
        max_boundary_fraction=params.get("max_boundary_fraction", 0.05),
    )
    verdicts = {
        "boundary_fraction": _verdict(
            law.boundary_fraction <= float(params.get("max_boundary_fraction", 0.05) or 1.0),
            value=law.boundary_fraction,
        )
    }
    results = {"boundary_fraction": law.boundary_fraction}
    tables = {"law.csv": law}
    if "compare_gaussian" in params:
        cg = params["compare_gaussian"]
        ref = simulate.gaussian_argmax_law(
            np.asarray(cg["Gamma"], dtype=float), np.asarray(cg["Sigma"], dtype=float), R, rngp.child(1)
        )
        ks = simulate.ks_distance(law, ref)
        ks_tol = float(cg.get("ks_tol", 0.02)) * tol_scale
        verdicts["gaussian_closed_form_ks"] = _verdict(ks <= ks_tol, ks=ks, tol=ks_tol)
        results["gaussian_ks"] = ks
    return verdicts, results, tables


def _run_continuity(cfg, rngp, tol_scale):
    k = cov_from_config(require(cfg, "cov", "config"))
    m = mean_from_config(require(cfg, "mean", "config"))
    params = cfg.get("params", {})
    ppu_levels = [int(p) for p in params.get("ppu_levels", [25, 50, 100])]
    R = int(params.get("replications", 20_000))
    N = float(params.get("N", 4.0))
    d = int(params.get("d", k.d))
    ell = int(params.get("coordinate", 0))
    t = float(params.get("location", 0.0))
    sampler_mode = params.get("sampler", "auto")
    profile = diagnostics.continuity_profile(
        k, m, ell, t, ppu_levels, R, rngp, N=N, d=d, sampler=sampler_mode,
        max_boundary_fraction=params.get("max_boundary_fraction", 0.05),
    )
    masses = [lv[1] for lv in profile.levels]
    ses = [lv[2] for lv in profile.levels]
    ratios = []
    for a, b, sa, sb in zip(masses, masses[1:], ses, ses[1:]):
        ratios.append(b / a if a > 0 else np.inf)
    lo, hi = params.get("ratio_range", [0.3, 0.7])
    ok = all(lo - 3 * (sb / max(a, 1e-12)) <= r <= hi + 3 * (sb / max(a, 1e-12))
             for r, a, sb in zip(ratios, masses, ses[1:]))
    verdicts = {"mass_scaling": _verdict(ok, ratios=ratios, target=[lo, hi])}
    results = {"masses": masses, "ratios": ratios}
    if "max_jump" in params:
        cap = float(params["max_jump"]) * tol_scale
        jump_ppu = int(params.get("jump_ppu", max(ppu_levels)))
        lat = simulate.build_lattice(d, N, jump_ppu)
        law = simulate.mc_argmax(
            k, m, lat, R, rngp.child(len(ppu_levels)), sampler=sampler_mode,
            max_boundary_fraction=params.get("max_boundary_fraction", 0.05),
        )
        jumps = [diagnostics.max_marginal_jump(law, j)[1] for j in range(d)]
        verdicts["marginal_jumps"] = _verdict(max(jumps) <= cap, jumps=jumps, tol=cap)
        results["max_marginal_jump"] = max(jumps)
    return verdicts, results, {"atom_profile.csv": profile}


def _run_discontinuity(cfg, rngp, tol_scale):
    params = cfg.get("params", {})
    gamma = float(require(params, "gamma", "params"))
    q = float(params.get("q", 0.8))
    R_cal = int(params.get("calibration_replications", 50_000))
    R = int(params.get("replications", 100_000))
    N = float(params.get("N", 4.0))
    ppu = int(params.get("ppu", 100))
    c, exceed, exceed_se = diagnostics.calibrate_c(gamma, R=R_cal, rngp=rngp.child(0), q=q)
    reports = []
    for j, p in enumerate([ppu, 2 * ppu]):
        lat = simulate.build_lattice(1, N, p)
        reports.append(diagnostics.discontinuity_experiment(gamma, c, lat, R, rngp.child(1 + j)))
    rep = reports[0]
    pooled_se = float(np.hypot(reports[0].se_zero, reports[1].se_zero))
    verdicts = {
        "exceedance_below_quarter": _verdict(
            exceed + 3 * exceed_se < 0.25, exceedance=exceed, se=exceed_se
        ),
        "atom_at_zero": _verdict(rep.p_zero >= 5 * rep.se_zero, p_zero=rep.p_zero, se=rep.se_zero),
        "p_pos_below_half": _verdict(rep.p_pos + 3 * rep.se_pos < 0.5, p_pos=rep.p_pos),
        "p_neg_below_half": _verdict(rep.p_neg + 3 * rep.se_neg < 0.5, p_neg=rep.p_neg),
        "atom_stable_under_refinement": _verdict(
            abs(reports[0].p_zero - reports[1].p_zero) <= 3 * pooled_se,
            p_zero_levels=[r.p_zero for r in reports],
        ),
    }
    results = {"c": c, "exceedance": exceed, "p_zero": rep.p_zero,
               "p_pos": rep.p_pos, "p_neg": rep.p_neg}
    return verdicts, results, {"discontinuity.csv": rep}


def _model_space_from_config(cfg):
    tbl = require(cfg, "model_space", "config")
    family = require(tbl, "family", "model_space")
    N = float(require(tbl, "N", "model_space"))
    if family == "maxscore":
        return rkhs.MaxScoreSpace(atoms_from_config(require(tbl, "atoms", "model_space"), "model_space.atoms"), N)
    if family == "threshreg":
        return rkhs.ThreshRegSpace(atoms_from_config(require(tbl, "atoms", "model_space"), "model_space.atoms"), N)
    if family == "erm":
        return rkhs.ErmSpace(require(tbl, "f", "model_space"), require(tbl, "p", "model_space"), N)
    raise ConfigError("model_space.family", f"unknown family {family!r}")


def _run_rkhs_verify(cfg, rngp, tol_scale):
    ms = _model_space_from_config(cfg)
    params = cfg.get("params", {})
    n_pairs = int(params.get("n_pairs", 25))
    tol = float(params.get("tol", 1e-8)) * tol_scale
    quad = rkhs.QuadratureSpec(mode=params.get("mode", "deterministic"),
                               order=int(params.get("order", 64)))
    rng = rngp.substream(0)
    pts = rng.uniform(-ms.N, ms.N, size=(n_pairs, 2, ms.d))
    pairs = [(p[0], p[1]) for p in pts]
    cov_err, cov_table = rkhs.verify_cov_representation(ms, pairs, quad)
    mean_err, mean_table = rkhs.verify_mean_representation(ms, [p[0] for p in pairs], quad)
    norm = rkhs.l2_norm_l(ms, quad)
    inconclusive = quad.mode == "mc" and (cov_err > tol or mean_err > tol) and all(
        row["error"] <= 3 * row["se"] + tol for row in cov_table + mean_table
    )
    verdicts = {
        "cov_representation": _verdict(cov_err <= tol, max_error=cov_err, tol=tol),
        "mean_representation": _verdict(mean_err <= tol, max_error=mean_err, tol=tol),
        "l2_norm_finite": _verdict(np.isfinite(norm), value=norm),
    }
    results = {"cov_max_error": cov_err, "mean_max_error": mean_err, "l2_norm": norm,
               "inconclusive": inconclusive}
    tables = {"cov_verification.csv": cov_table, "mean_verification.csv": mean_table}
    return verdicts, results, tables


def _run_estimator_mc(cfg, rngp, tol_scale):
    dgp = dgp_from_config(require(cfg, "dgp", "config"))
    params = cfg.get("params", {})
    ns = [int(n) for n in params.get("ns", [500, 2000, 8000])]
    reps = int(params.get("reps", 2000))
    lat = lattice_from_config(params.get("lattice", {"d": dgp.d, "N": 4.0, "ppu": 50}))
    R = int(params.get("limit_replications", 100_000))
    mean, cov = estimators.limit_specs(dgp)
    limit_law = simulate.mc_argmax(cov, mean, lat, R, rngp.child(0))
    rows, ks_values = [], []
    for j, n in enumerate(ns):
        law = estimators.sampling_law(dgp, n, reps, rngp.child(1 + j))
        ks = simulate.ks_distance(law, limit_law)
        ks_values.append(ks)
        rows.append({"n": n, "ks": ks})
    pooled = 0.5 * np.sqrt(1.0 / reps + 1.0 / R)
    monotone = all(b <= a + 3 * pooled for a, b in zip(ks_values, ks_values[1:]))
    final_tol = float(params.get("final_ks_tol", 0.1)) * tol_scale
    verdicts = {
        "ks_trend_decreasing": _verdict(monotone, ks=ks_values, allowance=3 * pooled),
        "final_ks": _verdict(ks_values[-1] <= final_tol, value=ks_values[-1], tol=final_tol),
    }
    return verdicts, {"ks_by_n": dict(zip(map(str, ns), ks_values))}, {"ks_by_n.csv": rows}


def _run_ci_experiment(cfg, rngp, tol_scale):
    dgp = dgp_from_config(require(cfg, "dgp", "config"))
    params = cfg.get("params", {})
    n = int(params.get("n", 2000))
    reps = int(params.get("reps", 300))
    B = int(params.get("B", 200))
    m = int(params.get("m", int(np.ceil(n ** (2 / 3)))))
    alpha = float(params.get("alpha", 0.05))
    lam = np.asarray(params.get("lam", np.eye(dgp.d)[0]), dtype=float)
    gen, fit = estimators._default_fit(dgp, n)
    scale = estimators.rate(dgp, m) / estimators.rate(dgp, n)
    target = float(lam @ dgp.theta0)
    covered, lengths = 0, []
    for rep in range(reps):
        rng = rngp.substream(rep)
        data = gen(dgp, n, rng)
        draws = estimators.subsample_draws(data, m, B, fit, rng, lam, scale)
        point = float(lam @ fit(data).theta)
        lo, hi = estimators.percentile_interval(point, draws, alpha)
        covered += lo <= target <= hi
        lengths.append(hi - lo)
    coverage = covered / reps
    rows = [{"n": n, "m": m, "B": B, "alpha": alpha, "coverage": coverage,
             "mean_length": float(np.mean(lengths))}]
    # report-only by design: subsampling-vs-bootstrap gap is out of scope
    verdicts = {"coverage_report": _verdict(True, coverage=coverage, nominal=1 - alpha,
                                            report_only=True)}
    return verdicts, {"coverage": coverage}, {"coverage.csv": rows}


_HANDLERS = {
    "check-kernel": _run_check_kernel,
    "simulate": _run_simulate,
    "continuity": _run_continuity,
    "discontinuity-example": _run_discontinuity,
    "rkhs-verify": _run_rkhs_verify,
    "estimator-mc": _run_estimator_mc,
    "ci-experiment": _run_ci_experiment,
}


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


def _bundled_configs():
    root = resources.files("gpargmax").joinpath("configs")
    out = {}
    for entry in sorted(root.iterdir()):
        if entry.name.endswith(".toml"):
            cfg = tomllib.loads(entry.read_text())
            out[entry.name.removesuffix(".toml")] = (entry, cfg)
    return out


def _write_tables(tables, outdir: Path):
    for name, obj in tables.items():
        path = outdir / name
        if isinstance(obj, simulate.EmpiricalLaw):
            io.save_law(obj, path)
        elif isinstance(obj, diagnostics.AtomProfile):
            io.save_atom_profile(obj, path)
        elif isinstance(obj, diagnostics.DiscontinuityReport):
            io.save_discontinuity_report(obj, path)
        else:
            io.save_table(obj, path)


def run_experiment(cfg: dict, outdir: Path, seed=None, tol_scale: float = 1.0) -> int:
    kind = require(cfg, "kind", "config")
    if kind not in KINDS:
        raise ConfigError("kind", f"unknown experiment kind {kind!r}; expected one of {KINDS}")
    if kind not in _HANDLERS:
        raise ConfigError("kind", f"no handler for {kind!r}")
    master_seed = int(seed if seed is not None else cfg.get("seed", 0))
    rngp = RngPolicy(master_seed)
    outdir.mkdir(parents=True, exist_ok=True)
    preexisting = set(outdir.iterdir())
    try:
        verdicts, results, tables = _HANDLERS[kind](cfg, rngp, tol_scale)
        _write_tables(tables, outdir)
        status = 0 if all(v["passed"] for v in verdicts.values()) else 1
        if status == 1 and results.get("inconclusive"):
            status = 2
        summary = {
            "schema_version": SCHEMA_VERSION,
            "kind": kind,
            "config_hash": config_hash(cfg),
            "seed": master_seed,
            "verdicts": verdicts,
            "results": results,
            "status": {0: "pass", 1: "fail", 2: "inconclusive"}[status],
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }
        (outdir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n")
        return status
    except Exception:
        for p in set(outdir.iterdir()) - preexisting:
            if p.is_file():
                p.unlink()
        raise


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gpargmax", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run one experiment from a TOML config")
    runp.add_argument("--config", required=True, help="config path or bundled config name")
    runp.add_argument("--out", default="results", help="output directory")
    runp.add_argument("--seed", type=int, default=None, help="override the config seed")
    runp.add_argument("--threads", type=int, default=None, help="BLAS thread cap")
    runp.add_argument("--tolerance-scale", type=float, default=1.0)
    sub.add_parser("list-experiments", help="print the bundled golden configs")
    args = parser.parse_args(argv)

    if args.command == "list-experiments":
        for name, (_, cfg) in _bundled_configs().items():
            desc = cfg.get("description", "")
            crit = cfg.get("criterion", "-")
            print(f"{name:28s} [{crit}] {desc}")
        return 0

    if args.threads:
        try:
            import threadpoolctl

            threadpoolctl.threadpool_limits(args.threads)
        except ImportError:
            pass
    path = Path(args.config)
    try:
        if path.exists():
            cfg = tomllib.loads(path.read_text())
        else:
            bundled = _bundled_configs()
            if args.config not in bundled:
                print(f"error: config {args.config!r} not found", file=sys.stderr)
                return 1
            cfg = bundled[args.config][1]
        return run_experiment(cfg, Path(args.out), seed=args.seed, tol_scale=args.tolerance_scale)
    except (ConfigError, tomllib.TOMLDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
