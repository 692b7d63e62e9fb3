"""Gaussian path simulation on lattices and Monte Carlo argmax laws.

Paths are pinned to zero at the origin.  Two sampling routes exist:

* a generic Cholesky factor of the Gram matrix on the non-origin points
  (works for any covariance spec, cost O(P^3) once, O(P^2) per draw);
* exact structured samplers for the Brownian-type families, which write
  the centered process as a weighted sum of independent two-sided
  Brownian motions evaluated at projected lattice points and sample it
  from independent increments (cost O(P) per draw).

Each replicate consumes only its own substream, so empirical laws are
bit-identical across batch sizes and worker counts.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import kernels
from .rng import RngPolicy

__all__ = [
    "Lattice",
    "PathSample",
    "ArgmaxDraw",
    "EmpiricalLaw",
    "build_lattice",
    "pinned_factor",
    "make_sampler",
    "sample_path",
    "sample_bm_exact_1d",
    "argmax_on_lattice",
    "mc_argmax",
    "ecdf_eval",
    "ks_distance",
    "gaussian_argmax_law",
]

DEFAULT_POINT_CAP = 25_000_000


@dataclass(frozen=True)
class Lattice:
    """Regular symmetric grid on [-N, N]^d with spacing 1/ppu.

    Coordinates are derived from integer indices, so the grid contains the
    exact origin and is exactly symmetric under negation.  Points are
    ordered lexicographically by index, which makes `argmax` tie-breaking
    (first maximum) the lexicographically smallest tied point.
    """

    d: int
    N: float
    ppu: int

    def __post_init__(self):
        if self.d < 1 or self.N < 1 or self.ppu < 1:
            raise ValueError("require d >= 1, N >= 1, ppu >= 1")
        if abs(self.N * self.ppu - round(self.N * self.ppu)) > 1e-9:
            raise ValueError("N * ppu must be an integer so the grid hits +/-N exactly")

    @property
    def n_side(self) -> int:
        return int(round(self.N * self.ppu))

    @property
    def axis_indices(self) -> np.ndarray:
        return np.arange(-self.n_side, self.n_side + 1)

    @property
    def n_points(self) -> int:
        return (2 * self.n_side + 1) ** self.d

    @property
    def spacing(self) -> float:
        return 1.0 / self.ppu

    def points(self) -> np.ndarray:
        """All lattice points, shape (n_points, d), lexicographic index order."""
        axes = [self.axis_indices] * self.d
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.d)
        return grid / self.ppu

    @property
    def origin_index(self) -> int:
        # middle of the lexicographic enumeration of a symmetric grid
        return (self.n_points - 1) // 2

    def boundary_mask(self) -> np.ndarray:
        axes = [np.abs(self.axis_indices) == self.n_side] * self.d
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, self.d)
        return grid.any(axis=1)


def build_lattice(d: int, N: float, ppu: int, point_cap: int = DEFAULT_POINT_CAP) -> Lattice:
    lat = Lattice(d, float(N), int(ppu))
    if lat.n_points > point_cap:
        raise ValueError(
            f"lattice would have {lat.n_points} points, exceeding the cap of {point_cap}"
        )
    return lat


@dataclass(frozen=True)
class PathSample:
    lattice: Lattice
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.lattice.n_points,):
            raise ValueError("path values must cover every lattice point")


@dataclass(frozen=True)
class ArgmaxDraw:
    point: np.ndarray
    value: float
    on_boundary: bool


@dataclass(frozen=True)
class EmpiricalLaw:
    """Monte Carlo sample of argmax (or estimator) draws with ECDF queries."""

    draws: np.ndarray  # (R, d)
    values: np.ndarray  # (R,)
    on_boundary: np.ndarray  # (R,) bool
    master_seed: int
    replications: int

    def __post_init__(self):
        if self.draws.shape[0] != self.replications:
            raise ValueError("draw count must equal requested replications")

    @property
    def d(self) -> int:
        return self.draws.shape[1]

    @property
    def boundary_fraction(self) -> float:
        return float(np.mean(self.on_boundary))


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


class CholeskySampler:
    """Pinned-path sampler from a jittered Cholesky factor of the Gram matrix.

    The origin is excluded from the factor (its variance is exactly zero)
    and its path value is always 0.
    """

    def __init__(self, k, lat: Lattice, jitter: float | None = None):
        pts = lat.points()
        keep = np.ones(pts.shape[0], dtype=bool)
        keep[lat.origin_index] = False
        G = kernels.gram(k, pts[keep])
        max_diag = float(np.max(np.diag(G))) or 1.0
        ladder = (
            [jitter]
            if jitter is not None
            else [max_diag * 10.0**e for e in range(-12, -5)]
        )
        L = None
        for j in ladder:
            try:
                L = np.linalg.cholesky(G + j * np.eye(G.shape[0]))
                final = j
                break
            except np.linalg.LinAlgError:
                continue
        if L is None:
            raise np.linalg.LinAlgError(
                f"Gram factorization failed; final jitter tried {ladder[-1]:.3e}"
            )
        self.lattice = lat
        self.factor = L
        self.jitter = final
        self._keep = keep
        self.n_normals = G.shape[0]

    def transform(self, Z: np.ndarray) -> np.ndarray:
        """Map (B, n_normals) standard normals to (B, P) centered path values."""
        out = np.zeros((Z.shape[0], self.lattice.n_points))
        out[:, self._keep] = Z @ self.factor.T
        return out


class _ProjectedBM:
    """One component: coef * B(proj value) for a two-sided standard BM."""

    def __init__(self, coef: float, proj: np.ndarray):
        u, inv = np.unique(proj, return_inverse=True)
        self.coef = coef
        self.inv = inv
        self.n_u = u.shape[0]
        pos = np.flatnonzero(u > 0)
        neg = np.flatnonzero(u < 0)[::-1]  # outward from 0: decreasing coordinate
        self.pos, self.neg = pos, neg
        self.sd_pos = np.sqrt(np.diff(u[pos], prepend=0.0)) if pos.size else np.empty(0)
        self.sd_neg = np.sqrt(np.diff(-u[neg], prepend=0.0)) if neg.size else np.empty(0)
        self.n_normals = pos.size + neg.size


class ProjectedBMSampler:
    """Exact sampler for kernels that are weighted sums of projected BMs.

    Covers ScaledBM1d, MixtureBM and SeparableBM: the centered process is
    sum_j coef_j * B_j(p_j(s)) with independent two-sided standard BMs B_j,
    sampled exactly from independent Gaussian increments outward from 0.
    """

    def __init__(self, k, lat: Lattice):
        pts = lat.points()
        comps: list[_ProjectedBM] = []
        if isinstance(k, kernels.ScaledBM1d):
            comps.append(_ProjectedBM(np.sqrt(k.sigma2), pts[:, 0]))
        elif isinstance(k, kernels.MixtureBM):
            for a in k.atoms:
                comps.append(_ProjectedBM(np.sqrt(a.w * a.a * a.f), pts @ a.x))
        elif isinstance(k, kernels.SeparableBM):
            for ell in range(k.d):
                if k.f[ell] > 0:
                    comps.append(_ProjectedBM(np.sqrt(k.f[ell]), pts[:, ell]))
        else:
            raise TypeError(f"no projected-BM structure for {type(k).__name__}")
        self.lattice = lat
        self.components = comps
        self.n_normals = sum(c.n_normals for c in comps)

    def transform(self, Z: np.ndarray) -> np.ndarray:
        B = Z.shape[0]
        out = np.zeros((B, self.lattice.n_points))
        off = 0
        for c in self.components:
            vals_u = np.zeros((B, c.n_u))
            npos = c.pos.size
            if npos:
                vals_u[:, c.pos] = np.cumsum(Z[:, off : off + npos] * c.sd_pos, axis=1)
            if c.neg.size:
                vals_u[:, c.neg] = np.cumsum(
                    Z[:, off + npos : off + c.n_normals] * c.sd_neg, axis=1
                )
            off += c.n_normals
            out += c.coef * vals_u[:, c.inv]
        return out


class BilinearSampler:
    """Exact sampler for C(s,t) = s' Sigma t: path values are s' Gdot."""

    def __init__(self, k: kernels.Bilinear, lat: Lattice):
        self.lattice = lat
        self._proj = lat.points() @ np.linalg.cholesky(k.Sigma)
        self.n_normals = k.d

    def transform(self, Z: np.ndarray) -> np.ndarray:
        return Z @ self._proj.T


def make_sampler(k, lat: Lattice, method: str = "auto"):
    """Choose a path sampler for the covariance spec.

    "auto" prefers the exact structured samplers and falls back to the
    Cholesky factor; "cholesky" forces the generic route.
    """
    if method == "cholesky":
        return CholeskySampler(k, lat)
    if method not in ("auto", "exact"):
        raise ValueError(f"unknown sampler method {method!r}")
    if isinstance(k, (kernels.ScaledBM1d, kernels.MixtureBM, kernels.SeparableBM)):
        return ProjectedBMSampler(k, lat)
    if isinstance(k, kernels.Bilinear):
        return BilinearSampler(k, lat)
    if method == "exact":
        raise TypeError(f"no exact sampler for {type(k).__name__}")
    return CholeskySampler(k, lat)


def pinned_factor(k, lat: Lattice, jitter: float | None = None) -> CholeskySampler:
    """Lower-triangular factor of the non-origin Gram matrix (plus jitter)."""
    return CholeskySampler(k, lat, jitter)


def sample_path(sampler, m, rng: np.random.Generator) -> PathSample:
    """One path mu + L z on the sampler's lattice, pinned to 0 at the origin."""
    z = rng.standard_normal(sampler.n_normals)
    values = sampler.transform(z[None, :])[0]
    if m is not None:
        values = values + m.evaluate(sampler.lattice.points())
    values[sampler.lattice.origin_index] = 0.0
    return PathSample(sampler.lattice, values)


def sample_bm_exact_1d(lat: Lattice, sigma2: float, rng: np.random.Generator) -> PathSample:
    """Oracle sampler: cumulative N(0, sigma2*h) increments outward from 0."""
    if lat.d != 1:
        raise ValueError("exact BM sampler requires d = 1")
    n = lat.n_side
    h = lat.spacing
    inc = rng.standard_normal(2 * n) * np.sqrt(sigma2 * h)
    values = np.zeros(2 * n + 1)
    values[n + 1 :] = np.cumsum(inc[:n])
    values[n - 1 :: -1] = np.cumsum(inc[n:])
    return PathSample(lat, values)


def argmax_on_lattice(p: PathSample) -> ArgmaxDraw:
    """Global maximizer; ties broken to the lexicographically smallest index."""
    i = int(np.argmax(p.values))
    pts = p.lattice.points()
    return ArgmaxDraw(pts[i], float(p.values[i]), bool(p.lattice.boundary_mask()[i]))


def mc_argmax(
    k,
    m,
    lat: Lattice,
    R: int,
    rngp: RngPolicy,
    sampler: str = "auto",
    batch_size: int = 256,
    warn_boundary: float = 0.01,
    max_boundary_fraction: float | None = 0.05,
) -> EmpiricalLaw:
    """Empirical law of the lattice argmax over R independent replications."""
    if R < 1:
        raise ValueError("R must be at least 1")
    smp = make_sampler(k, lat, sampler) if isinstance(sampler, str) else sampler
    pts = lat.points()
    mu = m.evaluate(pts) if m is not None else np.zeros(lat.n_points)
    boundary = lat.boundary_mask()
    origin = lat.origin_index

    draws = np.empty((R, lat.d))
    values = np.empty(R)
    on_bd = np.empty(R, dtype=bool)
    for start in range(0, R, batch_size):
        stop = min(start + batch_size, R)
        Z = np.empty((stop - start, smp.n_normals))
        for r in range(start, stop):
            Z[r - start] = rngp.substream(r).standard_normal(smp.n_normals)
        paths = smp.transform(Z)
        paths += mu
        paths[:, origin] = 0.0
        idx = np.argmax(paths, axis=1)
        draws[start:stop] = pts[idx]
        values[start:stop] = paths[np.arange(stop - start), idx]
        on_bd[start:stop] = boundary[idx]

    frac = float(np.mean(on_bd))
    if max_boundary_fraction is not None and frac > max_boundary_fraction:
        raise RuntimeError(
            f"boundary_fraction {frac:.3f} exceeds {max_boundary_fraction}; enlarge N"
        )
    if frac > warn_boundary:
        warnings.warn(
            f"boundary_fraction {frac:.3f} above {warn_boundary}; consider enlarging N",
            RuntimeWarning,
            stacklevel=2,
        )
    return EmpiricalLaw(draws, values, on_bd, rngp.master_seed, R)


def ecdf_eval(law: EmpiricalLaw, t) -> float:
    """F(t) = fraction of draws with every coordinate <= t (inclusive)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.shape[0] != law.d:
        raise ValueError("query dimension does not match the law")
    return float(np.mean(np.all(law.draws <= t, axis=1)))


def _ks_1d(a: np.ndarray, b: np.ndarray) -> float:
    pooled = np.concatenate([a, b])
    pooled.sort(kind="mergesort")
    fa = np.searchsorted(np.sort(a), pooled, side="right") / a.shape[0]
    fb = np.searchsorted(np.sort(b), pooled, side="right") / b.shape[0]
    return float(np.max(np.abs(fa - fb)))


def _ks_1d_cdf(a: np.ndarray, cdf) -> float:
    x = np.sort(a)
    n = x.shape[0]
    F = np.asarray(cdf(x), dtype=float)
    hi = np.max(np.arange(1, n + 1) / n - F)
    lo = np.max(F - np.arange(0, n) / n)
    return float(max(hi, lo))


def ks_distance(a: EmpiricalLaw, b, max_grid: int = 512) -> float:
    """Kolmogorov distance between two laws.

    For d = 1 this is the exact two-sample statistic (or exact one-sample
    statistic when `b` is a cdf callable).  For d > 1 the sup is taken over
    the corner grid formed per coordinate from pooled marginal values,
    thinned to at most `max_grid` quantiles per coordinate.
    """
    if callable(b):
        if a.d != 1:
            raise ValueError("cdf comparison implemented for d = 1 only")
        return _ks_1d_cdf(a.draws[:, 0], b)
    if a.d != b.d:
        raise ValueError("laws must share one dimension")
    if a.d == 1:
        return _ks_1d(a.draws[:, 0], b.draws[:, 0])
    axes = []
    for ell in range(a.d):
        pooled = np.unique(np.concatenate([a.draws[:, ell], b.draws[:, ell]]))
        if pooled.shape[0] > max_grid:
            qs = np.linspace(0, 1, max_grid)
            pooled = np.unique(np.quantile(pooled, qs, method="nearest"))
        axes.append(pooled)

    def joint_cdf_grid(draws):
        # counts on the grid cells, then cumulative in every coordinate
        idx = [np.searchsorted(ax, draws[:, i], side="right") for i, ax in enumerate(axes)]
        shape = tuple(ax.shape[0] + 1 for ax in axes)
        H = np.zeros(shape)
        np.add.at(H, tuple(idx), 1.0)
        for axis in range(a.d):
            H = np.cumsum(H, axis=axis)
        sl = tuple(slice(0, s - 1) for s in shape)
        return H[sl] / draws.shape[0]

    Fa = joint_cdf_grid(a.draws)
    Fb = joint_cdf_grid(b.draws)
    return float(np.max(np.abs(Fa - Fb)))


def gaussian_argmax_law(Gamma, Sigma, R: int, rngp: RngPolicy) -> EmpiricalLaw:
    """Closed-form Gaussian argmax draws for the bilinear-kernel case.

    Solves Gamma * s = Gdot with Gdot ~ N(0, Sigma), so the law is
    N(0, Gamma^-1 Sigma Gamma^-1).
    """
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    Sigma = np.atleast_2d(np.asarray(Sigma, dtype=float))
    d = Gamma.shape[0]
    if np.linalg.matrix_rank(Gamma) < d:
        raise np.linalg.LinAlgError("Gamma is singular")
    L = np.linalg.cholesky(Sigma)
    draws = np.empty((R, d))
    for r in range(R):
        gdot = L @ rngp.substream(r).standard_normal(d)
        draws[r] = scipy.linalg.solve(Gamma, gdot, assume_a="sym")
    values = 0.5 * np.einsum("ri,ij,rj->r", draws, Gamma, draws)
    return EmpiricalLaw(draws, values, np.zeros(R, dtype=bool), rngp.master_seed, R)
