"""Mean functions and covariance kernels of Brownian-type argmax limits.

The covariance families are built around the two-sided Brownian motion
kernel  cbm(s, t) = min(|s|, |t|) * 1{sgn(s) = sgn(t)},  with the
convention that any term involving s = 0 or t = 0 contributes 0.
Expectation-form kernels over a covariate distribution are represented
as finite mixtures of atoms, which makes every evaluation exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MixtureAtom",
    "Quadratic",
    "SeparableQuadratic",
    "ThreshRegAbs",
    "PowerMean",
    "PiecewisePowerMean",
    "Linear",
    "ScaledBM1d",
    "Bilinear",
    "MixtureBM",
    "SeparableBM",
    "eval_cbm",
    "eval_mean",
    "eval_cov",
    "gram",
    "check_shift_equivariance",
    "check_self_similarity",
    "check_mean_tail",
]


def eval_cbm(s, t):
    """Two-sided Brownian motion kernel; elementwise on arrays.

    Returns min(|s|,|t|) when s and t have the same strict sign, else 0.
    Zero arguments always contribute 0 (origin pinning).
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    same_sign = (np.sign(s) == np.sign(t)) & (s != 0.0) & (t != 0.0)
    out = np.minimum(np.abs(s), np.abs(t)) * same_sign
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class MixtureAtom:
    """One covariate atom of an expectation-form kernel/mean pair.

    w     : mixture weight (weights sum to 1 across the atom list)
    x     : covariate vector
    f     : conditional density value at the limit point
    a     : second-moment scale entering the kernel (1 for maximum score)
    fu    : error density at zero (maximum score mean)
    b     : second-moment scale entering the threshold-regression mean
    """

    w: float
    x: np.ndarray
    f: float
    a: float = 1.0
    fu: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        if self.w <= 0:
            raise ValueError("atom weight must be positive")
        for name in ("f", "a", "fu", "b"):
            if getattr(self, name) < 0:
                raise ValueError(f"atom field {name!r} must be nonnegative")

    @property
    def d(self) -> int:
        return self.x.shape[0]


def _check_atoms(atoms):
    atoms = tuple(atoms)
    if not atoms:
        raise ValueError("atom list must be nonempty")
    total = sum(a.w for a in atoms)
    if abs(total - 1.0) > 1e-12:
        raise ValueError(f"atom weights must sum to 1 (got {total!r})")
    d = atoms[0].d
    if any(a.d != d for a in atoms):
        raise ValueError("atoms must share one covariate dimension")
    return atoms


def _as_points(s, d):
    """Coerce to an (n, d) array of evaluation points; scalars allowed for d=1."""
    s = np.asarray(s, dtype=float)
    if s.ndim == 0:
        s = s.reshape(1, 1)
    elif s.ndim == 1:
        s = s.reshape(1, -1) if s.shape[0] == d else s.reshape(-1, 1)
    if s.shape[-1] != d:
        raise ValueError(f"point dimension {s.shape[-1]} does not match spec dimension {d}")
    return s


# ---------------------------------------------------------------------------
# Mean functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Quadratic:
    """mu(s) = -s' V s with V symmetric positive semidefinite."""

    V: np.ndarray

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.V, dtype=float))
        if V.shape[0] != V.shape[1] or not np.allclose(V, V.T):
            raise ValueError("V must be a square symmetric matrix")
        object.__setattr__(self, "V", V)

    @property
    def d(self) -> int:
        return self.V.shape[0]

    def evaluate(self, pts):
        pts = _as_points(pts, self.d)
        return -np.einsum("ni,ij,nj->n", pts, self.V, pts)


@dataclass(frozen=True)
class SeparableQuadratic:
    """mu(s) = -sum_l kappa_l * s_l**2 with positive per-coordinate kappa."""

    kappa: np.ndarray

    def __post_init__(self):
        k = np.atleast_1d(np.asarray(self.kappa, dtype=float))
        if np.any(k <= 0):
            raise ValueError("kappa entries must be positive")
        object.__setattr__(self, "kappa", k)

    @property
    def d(self) -> int:
        return self.kappa.shape[0]

    def evaluate(self, pts):
        pts = _as_points(pts, self.d)
        return -(pts**2) @ self.kappa


@dataclass(frozen=True)
class ThreshRegAbs:
    """mu(s) = -(1/2) sum_j w_j f_j b_j |x_j' s| over mixture atoms."""

    atoms: tuple

    def __post_init__(self):
        object.__setattr__(self, "atoms", _check_atoms(self.atoms))

    @property
    def d(self) -> int:
        return self.atoms[0].d

    def evaluate(self, pts):
        pts = _as_points(pts, self.d)
        out = np.zeros(pts.shape[0])
        for a in self.atoms:
            out -= 0.5 * a.w * a.f * a.b * np.abs(pts @ a.x)
        return out


@dataclass(frozen=True)
class PowerMean:
    """mu(s) = -c |s|**gamma on the line."""

    c: float
    gamma: float

    def __post_init__(self):
        if self.c <= 0 or self.gamma <= 0:
            raise ValueError("c and gamma must be positive")

    d = 1

    def evaluate(self, pts):
        pts = _as_points(pts, 1)[:, 0]
        return -self.c * np.abs(pts) ** self.gamma


@dataclass(frozen=True)
class PiecewisePowerMean:
    """mu(s) = -c |s| min(1, |s|)**(gamma-1): power near zero, linear tails."""

    c: float
    gamma: float

    def __post_init__(self):
        if self.c <= 0 or self.gamma <= 0:
            raise ValueError("c and gamma must be positive")

    d = 1

    def evaluate(self, pts):
        pts = _as_points(pts, 1)[:, 0]
        a = np.abs(pts)
        with np.errstate(divide="ignore"):
            body = np.where(a > 0, np.minimum(1.0, a) ** (self.gamma - 1.0), 0.0)
        return -self.c * a * body


@dataclass(frozen=True)
class Linear:
    """mu(s) = s' g; admits no maximizer over R^d (used as a negative control)."""

    g: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "g", np.atleast_1d(np.asarray(self.g, dtype=float)))

    @property
    def d(self) -> int:
        return self.g.shape[0]

    def evaluate(self, pts):
        return _as_points(pts, self.d) @ self.g


def eval_mean(m, s) -> float:
    """Evaluate a mean spec at a single point."""
    return float(m.evaluate(s)[0])


# ---------------------------------------------------------------------------
# Covariance kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaledBM1d:
    """C(s, t) = sigma2 * cbm(s, t) on the line."""

    sigma2: float

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")

    d = 1

    def pairwise(self, s, t):
        s = _as_points(s, 1)[:, 0]
        t = _as_points(t, 1)[:, 0]
        return self.sigma2 * eval_cbm(s[:, None], t[None, :])


@dataclass(frozen=True)
class Bilinear:
    """C(s, t) = s' Sigma t with Sigma symmetric positive definite."""

    Sigma: np.ndarray

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.Sigma, dtype=float))
        if S.shape[0] != S.shape[1] or not np.allclose(S, S.T):
            raise ValueError("Sigma must be square symmetric")
        if np.any(np.linalg.eigvalsh(S) <= 0):
            raise ValueError("Sigma must be positive definite")
        object.__setattr__(self, "Sigma", S)

    @property
    def d(self) -> int:
        return self.Sigma.shape[0]

    def pairwise(self, s, t):
        s = _as_points(s, self.d)
        t = _as_points(t, self.d)
        return s @ self.Sigma @ t.T


@dataclass(frozen=True)
class MixtureBM:
    """C(s, t) = sum_j w_j a_j f_j cbm(x_j's, x_j't) over covariate atoms."""

    atoms: tuple

    def __post_init__(self):
        object.__setattr__(self, "atoms", _check_atoms(self.atoms))

    @property
    def d(self) -> int:
        return self.atoms[0].d

    def pairwise(self, s, t):
        s = _as_points(s, self.d)
        t = _as_points(t, self.d)
        out = np.zeros((s.shape[0], t.shape[0]))
        for a in self.atoms:
            ps, pt = s @ a.x, t @ a.x
            out += a.w * a.a * a.f * eval_cbm(ps[:, None], pt[None, :])
        return out


@dataclass(frozen=True)
class SeparableBM:
    """C(s, t) = sum_l f_l * cbm(s_l, t_l), coordinatewise Brownian motions."""

    f: np.ndarray

    def __post_init__(self):
        f = np.atleast_1d(np.asarray(self.f, dtype=float))
        if np.any(f < 0):
            raise ValueError("f entries must be nonnegative")
        object.__setattr__(self, "f", f)

    @property
    def d(self) -> int:
        return self.f.shape[0]

    def pairwise(self, s, t):
        s = _as_points(s, self.d)
        t = _as_points(t, self.d)
        out = np.zeros((s.shape[0], t.shape[0]))
        for ell in range(self.d):
            out += self.f[ell] * eval_cbm(s[:, ell][:, None], t[:, ell][None, :])
        return out


def eval_cov(k, s, t) -> float:
    """Evaluate a covariance spec at a single pair of points."""
    return float(k.pairwise(s, t)[0, 0])


def gram(k, pts) -> np.ndarray:
    """Gram matrix on a finite point set, exactly symmetric by construction."""
    pts = _as_points(pts, k.d)
    if pts.shape[0] == 0:
        raise ValueError("point set must be nonempty")
    M = k.pairwise(pts, pts)
    # mirror the upper triangle so symmetry holds bitwise
    iu = np.triu_indices(M.shape[0], k=1)
    M[(iu[1], iu[0])] = M[iu]
    return M


# ---------------------------------------------------------------------------
# Identity checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    residual: float
    detail: dict = field(default_factory=dict)


def check_shift_equivariance(k, h, s, t, tol: float = 1e-10) -> CheckResult:
    """Residual of C(h+s,h+t) - C(h+s,h) - C(h,h+t) + C(h,h) = C(s,t).

    Passes iff the residual is within tol and C(h,h) > 0 (non-degeneracy).
    """
    h = _as_points(h, k.d)[0]
    if not np.any(h != 0):
        raise ValueError("h must be nonzero")
    s = _as_points(s, k.d)[0]
    t = _as_points(t, k.d)[0]
    chh = eval_cov(k, h, h)
    lhs = eval_cov(k, h + s, h + t) - eval_cov(k, h + s, h) - eval_cov(k, h, h + t) + chh
    residual = abs(lhs - eval_cov(k, s, t))
    return CheckResult(residual <= tol and chh > 0, residual, {"C(h,h)": chh})


def check_self_similarity(k, tau, s, t, H: float = 0.5, tol: float = 1e-10) -> CheckResult:
    """Residual of C(tau*s, tau*t) = tau**(2H) * C(s, t) for tau > 0."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    s = _as_points(s, k.d)[0]
    t = _as_points(t, k.d)[0]
    residual = abs(eval_cov(k, tau * s, tau * t) - tau ** (2 * H) * eval_cov(k, s, t))
    return CheckResult(residual <= tol, residual)


def check_mean_tail(m, H, eps, radii, directions) -> CheckResult:
    """Tail condition for argmax existence: mu(r*u)/r**(H+eps) <= -eta < 0.

    Evaluated at the largest radii over all sampled unit directions.  A
    linear mean fails along its own direction, as it must.
    """
    radii = np.sort(np.asarray(radii, dtype=float))
    if radii[-1] < 100:
        raise ValueError("largest radius must be at least 100")
    directions = _as_points(directions, m.d)
    norms = np.linalg.norm(directions, axis=1)
    directions = directions / norms[:, None]
    r = radii[-1]
    ratios = m.evaluate(r * directions) / r ** (H + eps)
    eta = -float(np.max(ratios))
    return CheckResult(eta > 0, max(0.0, -eta), {"eta": eta, "radius": float(r)})
