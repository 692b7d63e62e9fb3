"""Desk-scale extremum estimators with closed-form limit experiments.

Each data-generating process uses atomized covariates so the limiting
mean function and covariance kernel reduce to finite sums and can be
handed to the simulation engine exactly.  The fitters are exhaustive
searches (the objectives are piecewise constant or nonconvex), which
keeps them honest against brute-force oracles.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .kernels import (
    MixtureAtom,
    MixtureBM,
    Quadratic,
    SeparableBM,
    SeparableQuadratic,
    ThreshRegAbs,
)
from .rng import RngPolicy
from .simulate import EmpiricalLaw

__all__ = [
    "MaxScoreDGP",
    "ERMDGP",
    "ThreshRegDGP",
    "Dataset",
    "FitResult",
    "gen_maxscore",
    "fit_maxscore",
    "gen_erm",
    "fit_erm",
    "gen_threshreg",
    "fit_threshreg",
    "limit_specs",
    "rate",
    "sampling_law",
    "percentile_quantile",
    "percentile_interval",
    "subsample_draws",
]

_NORM_PDF0 = 1.0 / np.sqrt(2.0 * np.pi)


def _norm_pdf(x, sigma):
    return np.exp(-0.5 * (x / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi))


@dataclass(frozen=True)
class Dataset:
    """One synthetic sample; columns depend on the generating model."""

    columns: dict
    seed_note: str = ""

    def __getitem__(self, key):
        return self.columns[key]

    @property
    def n(self) -> int:
        return next(iter(self.columns.values())).shape[0]


@dataclass(frozen=True)
class FitResult:
    theta: np.ndarray
    objective: float
    n_candidates: int
    extras: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Maximum score
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MaxScoreDGP:
    """Binary response y = 1{w + x'theta0 >= u} with atomized x.

    w ~ N(0, w_sigma^2) and u ~ N(0, u_sigma^2), both independent of x, so
    Median(u | w, x) = 0 and all conditional densities are explicit.
    """

    theta0: np.ndarray
    x_atoms: tuple  # ((prob, x vector), ...)
    w_sigma: float = 1.0
    u_sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "theta0", np.atleast_1d(np.asarray(self.theta0, float)))
        atoms = tuple((float(p), np.atleast_1d(np.asarray(x, float))) for p, x in self.x_atoms)
        if abs(sum(p for p, _ in atoms) - 1.0) > 1e-12:
            raise ValueError("x atom probabilities must sum to 1")
        object.__setattr__(self, "x_atoms", atoms)

    @property
    def d(self) -> int:
        return self.theta0.shape[0]

    @property
    def fu0(self) -> float:
        return _NORM_PDF0 / self.u_sigma


def gen_maxscore(dgp: MaxScoreDGP, n: int, rng: np.random.Generator) -> Dataset:
    probs = np.array([p for p, _ in dgp.x_atoms])
    xs = np.array([x for _, x in dgp.x_atoms])
    idx = rng.choice(len(xs), p=probs, size=n)
    X = xs[idx]
    w = rng.normal(0.0, dgp.w_sigma, size=n)
    u = rng.normal(0.0, dgp.u_sigma, size=n)
    y = (w + X @ dgp.theta0 >= u).astype(int)
    return Dataset({"y": y, "w": w, "X": X})


def fit_maxscore(data: Dataset, grid: np.ndarray) -> FitResult:
    """Maximize sum (2y-1) 1{w + x'theta >= 0} over a finite grid.

    The coefficient on w is normalized to 1.  Ties go to the first
    (lexicographically smallest) grid index.
    """
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[0] == 0:
        raise ValueError("grid must be nonempty")
    y, w, X = data["y"], data["w"], data["X"]
    signs = 2.0 * y - 1.0
    best_val, best_i = -np.inf, -1
    chunk = max(1, int(5e7) // max(1, X.shape[0]))
    for start in range(0, grid.shape[0], chunk):
        G = grid[start : start + chunk]
        scores = signs @ ((w[:, None] + X @ G.T) >= 0)
        i = int(np.argmax(scores))
        if scores[i] > best_val:
            best_val, best_i = float(scores[i]), start + i
    return FitResult(grid[best_i], best_val, grid.shape[0])


# ---------------------------------------------------------------------------
# Empirical risk minimization (interval classifier)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ERMDGP:
    """Interval classifier DGP: x ~ U[0,1], y in {-1,1} with P[y=1|x] = py(x).

    `p_at_theta0` holds the derivative of py at each cut, which must make
    (-1)^ell * p_ell * f < 0 for every ell (f = 1 for the uniform feature).
    """

    theta0: np.ndarray
    py: object = None  # callable x -> P[y=1|x]
    p_at_theta0: np.ndarray = None

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.theta0, dtype=float))
        if np.any(np.diff(t) < 0) or t[0] < 0 or t[-1] > 1:
            raise ValueError("theta0 must be ordered inside [0, 1]")
        object.__setattr__(self, "theta0", t)
        if self.py is None:
            object.__setattr__(self, "py", _default_py(t))
        if self.p_at_theta0 is None:
            signs = -((-1.0) ** np.arange(1, t.shape[0] + 1))
            object.__setattr__(self, "p_at_theta0", signs)
        else:
            object.__setattr__(
                self, "p_at_theta0", np.atleast_1d(np.asarray(self.p_at_theta0, float))
            )
        signs = (-1.0) ** np.arange(1, t.shape[0] + 1)
        if np.any(signs * self.p_at_theta0 >= 0):
            raise ValueError("need (-1)^ell * p(theta0_ell) < 0 for every ell")

    @property
    def d(self) -> int:
        return self.theta0.shape[0]


def _default_py(theta0: np.ndarray):
    """Piecewise-linear success curve crossing 1/2 at each cut, slope +/-1."""

    def py(x):
        x = np.asarray(x, dtype=float)
        dist = np.min(
            np.stack([s * (x - t) for t, s in zip(theta0, -((-1.0) ** np.arange(1, theta0.shape[0] + 1)))]),
            axis=0,
        )
        return np.clip(0.5 + dist, 0.0, 1.0)

    return py


def gen_erm(dgp: ERMDGP, n: int, rng: np.random.Generator) -> Dataset:
    x = rng.uniform(0.0, 1.0, size=n)
    y = np.where(rng.uniform(size=n) < dgp.py(x), 1, -1)
    return Dataset({"x": x, "y": y})


def erm_classify(theta: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Labels of the alternating interval classifier with cuts theta."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    ell = np.searchsorted(theta, x, side="right") + 1  # interval index, 1-based
    return (-1.0) ** ell


def erm_objective(theta, data: Dataset) -> int:
    return int(np.sum(erm_classify(theta, data["x"]) != data["y"]))


def fit_erm(data: Dataset, d: int) -> FitResult:
    """Exact minimizer of the misclassification count over candidate cuts.

    The objective is piecewise constant with breakpoints at the sample
    points; candidates are 0 and the sorted distinct x values.  d = 1 is a
    single scan; d = 2 exploits separability of the count in the two cut
    positions with a prefix-minimum sweep.  Ties go to the smallest
    (lexicographic) candidate.
    """
    x, y = data["x"], data["y"]
    order = np.argsort(x, kind="mergesort")
    xs, ys = x[order], y[order]
    cand = np.unique(np.concatenate([[0.0], xs]))
    pos = np.searchsorted(xs, cand, side="left")
    n = xs.shape[0]
    cum_pos = np.concatenate([[0], np.cumsum(ys == 1)])  # +1 labels among first i
    cum_neg = np.concatenate([[0], np.cumsum(ys == -1)])
    if d == 1:
        # miss(theta) = #(y=+1, x<theta) + #(y=-1, x>=theta)
        miss = cum_pos[pos] + (cum_neg[n] - cum_neg[pos])
        i = int(np.argmin(miss))
        return FitResult(np.array([cand[i]]), float(miss[i]), cand.shape[0])
    if d == 2:
        # miss(t1,t2) = #(+1, x<t1) + #(-1, t1<=x<t2) + #(+1, x>=t2)
        #            = A[i] + B[j] + total(+1),  A = cum_pos - cum_neg at t1,
        #              B = cum_neg - cum_pos at t2; minimize over i <= j.
        A = cum_pos[pos] - cum_neg[pos]
        B = cum_neg[pos] - cum_pos[pos]
        best = (np.inf, -1, -1)
        run_min, run_arg = np.inf, -1
        for j in range(cand.shape[0]):
            if A[j] < run_min:
                run_min, run_arg = A[j], j
            val = run_min + B[j] + cum_pos[n]
            if val < best[0]:
                best = (val, run_arg, j)
        theta = np.array([cand[best[1]], cand[best[2]]])
        return FitResult(theta, float(best[0]), cand.shape[0] * (cand.shape[0] + 1) // 2)
    raise ValueError("fit_erm supports d in {1, 2} at desk scale")


# ---------------------------------------------------------------------------
# Threshold regression
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThreshRegDGP:
    """y = x'beta0 + x'delta_n 1{q > w'theta0} + u with vanishing delta_n.

    delta_n = n^(-a_rate) * delta_bar with a_rate in (0, 1/2), so that
    the magnitude vanishes while n * ||delta_n||^2 diverges.  x and w are
    atomized; q ~ N(0, q_sigma^2) and u ~ N(0, u_sigma^2) independent.
    """

    beta0: np.ndarray
    delta_bar: np.ndarray
    theta0: np.ndarray
    x_atoms: tuple
    w_atoms: tuple
    a_rate: float = 0.25
    q_sigma: float = 1.0
    u_sigma: float = 1.0

    def __post_init__(self):
        for name in ("beta0", "delta_bar", "theta0"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), float)))
        if abs(np.linalg.norm(self.delta_bar) - 1.0) > 1e-10:
            raise ValueError("delta_bar must be a unit vector")
        if not 0 < self.a_rate < 0.5:
            raise ValueError("a_rate must lie in (0, 1/2)")
        for name in ("x_atoms", "w_atoms"):
            atoms = tuple(
                (float(p), np.atleast_1d(np.asarray(v, float))) for p, v in getattr(self, name)
            )
            if abs(sum(p for p, _ in atoms) - 1.0) > 1e-12:
                raise ValueError(f"{name} probabilities must sum to 1")
            object.__setattr__(self, name, atoms)

    @property
    def k(self) -> int:
        return self.beta0.shape[0]

    @property
    def d(self) -> int:
        return self.theta0.shape[0]

    def delta_n(self, n: int) -> np.ndarray:
        return n**-self.a_rate * self.delta_bar

    @property
    def Exx(self) -> np.ndarray:
        return sum(p * np.outer(x, x) for p, x in self.x_atoms)


def gen_threshreg(dgp: ThreshRegDGP, n: int, rng: np.random.Generator) -> Dataset:
    px = np.array([p for p, _ in dgp.x_atoms])
    xs = np.array([x for _, x in dgp.x_atoms])
    pw = np.array([p for p, _ in dgp.w_atoms])
    ws = np.array([w for _, w in dgp.w_atoms])
    X = xs[rng.choice(len(xs), p=px, size=n)]
    W = ws[rng.choice(len(ws), p=pw, size=n)]
    q = rng.normal(0.0, dgp.q_sigma, size=n)
    u = rng.normal(0.0, dgp.u_sigma, size=n)
    y = X @ dgp.beta0 + (X @ dgp.delta_n(n)) * (q > W @ dgp.theta0) + u
    return Dataset({"y": y, "X": X, "q": q, "W": W})


def fit_threshreg(data: Dataset, grid: np.ndarray) -> FitResult:
    """Profile least squares over a finite grid of threshold candidates."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if grid.shape[0] == 0:
        raise ValueError("grid must be nonempty")
    y, X, q, W = data["y"], data["X"], data["q"], data["W"]
    k = X.shape[1]
    best = None
    skipped = 0
    for i, theta in enumerate(grid):
        ind = (q > W @ theta).astype(float)
        Z = np.hstack([X, X * ind[:, None]])
        coef, _, rank, _ = np.linalg.lstsq(Z, y, rcond=None)
        if rank < 2 * k:
            skipped += 1
            continue
        rss = float(np.sum((y - Z @ coef) ** 2))
        if best is None or rss < best[0]:
            best = (rss, i, coef)
    if best is None:
        raise RuntimeError("all threshold candidates were rank deficient")
    if skipped:
        warnings.warn(f"skipped {skipped} rank-deficient candidates", RuntimeWarning, stacklevel=2)
    rss, i, coef = best
    return FitResult(
        grid[i],
        rss,
        grid.shape[0],
        extras={"beta": coef[:k], "delta": coef[k:], "skipped": skipped},
    )


# ---------------------------------------------------------------------------
# Limit experiments and rates
# ---------------------------------------------------------------------------


def limit_specs(dgp):
    """Closed-form limiting (mean spec, covariance spec) of the DGP."""
    if isinstance(dgp, MaxScoreDGP):
        atoms = []
        V = np.zeros((dgp.d, dgp.d))
        for p, x in dgp.x_atoms:
            fw = float(_norm_pdf(-x @ dgp.theta0, dgp.w_sigma))
            atoms.append(MixtureAtom(w=p, x=x, f=fw, a=1.0, fu=dgp.fu0))
            V += p * dgp.fu0 * fw * np.outer(x, x)
        return Quadratic(V), MixtureBM(tuple(atoms))
    if isinstance(dgp, ERMDGP):
        signs = (-1.0) ** np.arange(1, dgp.d + 1)
        kappa = -signs * dgp.p_at_theta0  # feature density is 1 on [0, 1]
        return SeparableQuadratic(kappa), SeparableBM(np.ones(dgp.d))
    if isinstance(dgp, ThreshRegDGP):
        scale = float(dgp.delta_bar @ dgp.Exx @ dgp.delta_bar)
        atoms = []
        for p, w in dgp.w_atoms:
            fq = float(_norm_pdf(w @ dgp.theta0, dgp.q_sigma))
            atoms.append(
                MixtureAtom(w=p, x=w, f=fq, a=scale * dgp.u_sigma**2, b=scale)
            )
        atoms = tuple(atoms)
        return ThreshRegAbs(atoms), MixtureBM(atoms)
    raise TypeError(f"no limit experiment for {type(dgp).__name__}")


def rate(dgp, n: int) -> float:
    """Rate of convergence r_n of the estimator's centered law."""
    if isinstance(dgp, (MaxScoreDGP, ERMDGP)):
        return float(np.cbrt(n))
    if isinstance(dgp, ThreshRegDGP):
        return float(n * np.sum(dgp.delta_n(n) ** 2))
    raise TypeError(f"no rate for {type(dgp).__name__}")


def _default_fit(dgp, n: int):
    """Default generator/fitter pair for a DGP at sample size n."""
    if isinstance(dgp, ERMDGP):
        return gen_erm, lambda data: fit_erm(data, dgp.d)
    if isinstance(dgp, MaxScoreDGP):
        half = 4.0 / rate(dgp, n)
        step = 0.1 / rate(dgp, n)
        ax = np.arange(-half, half + step / 2, step)
        grids = np.meshgrid(*([ax] * dgp.d), indexing="ij")
        grid = dgp.theta0 + np.stack(grids, axis=-1).reshape(-1, dgp.d)
        return gen_maxscore, lambda data: fit_maxscore(data, grid)
    if isinstance(dgp, ThreshRegDGP):
        half = 4.0 / rate(dgp, n)
        step = 0.1 / rate(dgp, n)
        ax = np.arange(-half, half + step / 2, step)
        grids = np.meshgrid(*([ax] * dgp.d), indexing="ij")
        grid = dgp.theta0 + np.stack(grids, axis=-1).reshape(-1, dgp.d)
        return gen_threshreg, lambda data: fit_threshreg(data, grid)
    raise TypeError(f"no default fitter for {type(dgp).__name__}")


def sampling_law(dgp, n: int, reps: int, rngp: RngPolicy, fitter=None) -> EmpiricalLaw:
    """Empirical law of r_n * (theta_hat - theta0) over independent samples."""
    if reps < 100:
        raise ValueError("reps must be at least 100")
    gen, fit = _default_fit(dgp, n) if fitter is None else fitter
    r_n = rate(dgp, n)
    draws = np.empty((reps, dgp.d))
    values = np.empty(reps)
    for rep in range(reps):
        rng = rngp.substream(rep)
        res = fit(gen(dgp, n, rng))
        draws[rep] = r_n * (res.theta - dgp.theta0)
        values[rep] = res.objective
    return EmpiricalLaw(draws, values, np.zeros(reps, dtype=bool), rngp.master_seed, reps)


# ---------------------------------------------------------------------------
# Percentile machinery
# ---------------------------------------------------------------------------


def percentile_quantile(draws, t: float) -> float:
    """inf{q : fraction of draws <= q  >=  t}: the ceil(t*B) order statistic."""
    draws = np.sort(np.asarray(draws, dtype=float))
    if draws.shape[0] == 0:
        raise ValueError("draw set is empty")
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    idx = int(np.ceil(t * draws.shape[0])) - 1
    return float(draws[idx])


def percentile_interval(point: float, draws, alpha: float):
    """Equal-tailed percentile interval [point - q(1-a/2), point - q(a/2)]."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    hi = percentile_quantile(draws, 1 - alpha / 2)
    lo = percentile_quantile(draws, alpha / 2)
    return float(point - hi), float(point - lo)


def subsample_draws(
    data: Dataset,
    m: int,
    B: int,
    fit,
    rng: np.random.Generator,
    lam: np.ndarray,
    scale: float = 1.0,
) -> np.ndarray:
    """m-out-of-n subsampling draws of lam'(theta_tilde - theta_hat).

    `fit` maps a Dataset to a FitResult; `scale` is the r_m / r_n rescaling
    of the experiment.  More than 10% fit failures is an error.
    """
    n = data.n
    if not 1 <= m <= n:
        raise ValueError("need 1 <= m <= n")
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    full = fit(data)
    point = float(lam @ full.theta)
    draws = []
    failures = 0
    for _ in range(B):
        idx = rng.choice(n, size=m, replace=False)
        sub = Dataset({k: v[idx] for k, v in data.columns.items()})
        try:
            res = fit(sub)
        except Exception:
            failures += 1
            continue
        draws.append(scale * (float(lam @ res.theta) - point))
    if failures > 0.1 * B:
        raise RuntimeError(f"{failures}/{B} subsample fits failed")
    return np.asarray(draws)
