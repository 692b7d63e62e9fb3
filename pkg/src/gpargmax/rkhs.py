"""Model-space verification of the mean-in-RKHS condition.

For each example family we carry a measure space plus functions e(., s)
and l(.) and check numerically that

    C(s, t) = integral of e(w; s) e(w; t) dnu(w)
    mu(s)   = integral of e(w; s) l(w)    dnu(w)

with l square-integrable.  The covariate coordinate of the measure is an
exact finite sum over mixture atoms; the remaining scalar integrands are
piecewise polynomial, so deterministic Gauss-Legendre quadrature on the
pieces is exact up to float rounding.  A Monte Carlo mode validates the
quadrature path independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import (
    MixtureBM,
    Quadratic,
    SeparableBM,
    SeparableQuadratic,
    ThreshRegAbs,
    _check_atoms,
)

__all__ = [
    "QuadratureSpec",
    "MaxScoreSpace",
    "ThreshRegSpace",
    "ErmSpace",
    "eval_e",
    "eval_l",
    "verify_cov_representation",
    "verify_mean_representation",
    "erm_cross_term_total",
    "l2_norm_l",
    "tensor_membership_check",
]


@dataclass(frozen=True)
class QuadratureSpec:
    mode: str = "deterministic"  # or "mc"
    order: int = 64  # Gauss-Legendre nodes per piece
    mc_size: int = 20_000
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("deterministic", "mc"):
            raise ValueError("mode must be 'deterministic' or 'mc'")
        if self.mode == "deterministic" and self.order < 64:
            raise ValueError("deterministic quadrature needs at least 64 nodes per piece")
        if self.mode == "mc" and self.mc_size < 10_000:
            raise ValueError("MC quadrature needs at least 1e4 samples")


def _piecewise_gl(fun, breakpoints, order: int) -> float:
    """Integrate fun over [min, max] of breakpoints, splitting at each one."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    bps = np.unique(np.asarray(breakpoints, dtype=float))
    total = 0.0
    for lo, hi in zip(bps[:-1], bps[1:]):
        if hi > lo:
            x = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
            total += 0.5 * (hi - lo) * float(np.dot(weights, fun(x)))
    return total


def _ind(omega, a):
    """Indicator of omega in [0, a] (a >= 0) or [a, 0) (a < 0), elementwise."""
    omega = np.asarray(omega, dtype=float)
    return np.where(a >= 0, (omega >= 0) & (omega <= a), (omega >= a) & (omega < 0)).astype(float)


# ---------------------------------------------------------------------------
# Model spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MaxScoreSpace:
    """Model space for the binary-response example: nu = Lebesgue x atoms."""

    atoms: tuple
    N: float

    def __post_init__(self):
        atoms = _check_atoms(self.atoms)
        if any(abs(a.a - 1.0) > 1e-12 for a in atoms):
            raise ValueError("maximum-score atoms must have a = 1")
        object.__setattr__(self, "atoms", atoms)
        if self.N <= 0:
            raise ValueError("N must be positive")

    @property
    def d(self) -> int:
        return self.atoms[0].d

    def trunc_radius(self, atom) -> float:
        return self.N * np.sqrt(self.d) * float(np.linalg.norm(atom.x))

    def e(self, omega1, j: int, s) -> np.ndarray:
        a = self.atoms[j]
        return _ind(omega1, float(np.dot(a.x, s))) * np.sqrt(a.f)

    def l(self, omega1, j: int) -> np.ndarray:
        a = self.atoms[j]
        omega1 = np.asarray(omega1, dtype=float)
        trunc = (np.abs(omega1) <= self.trunc_radius(a)).astype(float)
        return -2.0 * trunc * np.abs(omega1) * a.fu * np.sqrt(a.f)

    def cov_spec(self) -> MixtureBM:
        return MixtureBM(self.atoms)

    def mean_spec(self) -> Quadratic:
        V = sum(a.w * a.fu * a.f * np.outer(a.x, a.x) for a in self.atoms)
        return Quadratic(V)


@dataclass(frozen=True)
class ThreshRegSpace:
    """Model space for the threshold-regression example."""

    atoms: tuple
    N: float

    def __post_init__(self):
        object.__setattr__(self, "atoms", _check_atoms(self.atoms))
        if any(a.a <= 0 for a in self.atoms):
            raise ValueError("threshold-regression atoms need a > 0")
        if self.N <= 0:
            raise ValueError("N must be positive")

    @property
    def d(self) -> int:
        return self.atoms[0].d

    def trunc_radius(self, atom) -> float:
        return self.N * np.sqrt(self.d) * float(np.linalg.norm(atom.x))

    def e(self, omega1, j: int, s) -> np.ndarray:
        a = self.atoms[j]
        return _ind(omega1, float(np.dot(a.x, s))) * np.sqrt(a.a * a.f)

    def l(self, omega1, j: int) -> np.ndarray:
        a = self.atoms[j]
        omega1 = np.asarray(omega1, dtype=float)
        trunc = (np.abs(omega1) <= self.trunc_radius(a)).astype(float)
        return -0.5 * trunc * a.b * np.sqrt(a.f / a.a)

    def cov_spec(self) -> MixtureBM:
        return MixtureBM(self.atoms)

    def mean_spec(self) -> ThreshRegAbs:
        return ThreshRegAbs(self.atoms)


@dataclass(frozen=True)
class ErmSpace:
    """Model space for the interval-classifier example: nu = Lebesgue on R^d.

    f holds the per-coordinate feature density values, p the signed slopes
    of the success curve; admissibility requires (-1)^ell * p_ell * f_ell < 0
    for every coordinate (ell counted from 1).
    """

    f: np.ndarray
    p: np.ndarray
    N: float

    def __post_init__(self):
        f = np.atleast_1d(np.asarray(self.f, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if f.shape != p.shape:
            raise ValueError("f and p must have the same length")
        signs = (-1.0) ** np.arange(1, f.shape[0] + 1)
        if np.any(signs * p * f >= 0):
            raise ValueError("need (-1)^ell * p_ell * f_ell < 0 for every coordinate")
        if self.N < 1:
            raise ValueError("N must be at least 1")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "p", p)

    @property
    def d(self) -> int:
        return self.f.shape[0]

    def _u_density(self) -> float:
        return (2.0 * self.N) ** -self.d

    def e(self, omega, s) -> float:
        """Full d-dimensional evaluation at one omega in R^d."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(np.abs(omega) > self.N):
            return 0.0
        pref = np.sqrt(24.0 * self.N * self._u_density())
        a = np.cbrt(s)
        terms = (omega - a / 2) * _ind(omega, a) * np.sqrt(self.f)
        return float(pref * np.sum(terms))

    def l(self, omega) -> float:
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        if np.any(np.abs(omega) > self.N):
            return 0.0
        pref = np.sqrt(75.0 * self.N * self._u_density() / 2.0)
        signs = (-1.0) ** np.arange(1, self.d + 1)
        terms = omega**3 * np.abs(omega) * signs * self.p * np.sqrt(self.f)
        return float(pref * np.sum(terms))

    def cov_spec(self) -> SeparableBM:
        return SeparableBM(self.f)

    def mean_spec(self) -> SeparableQuadratic:
        signs = (-1.0) ** np.arange(1, self.d + 1)
        return SeparableQuadratic(-signs * self.p * self.f)


def eval_e(ms, omega, s) -> float:
    """Evaluate e at one point of the model space's support convention.

    Atom families take omega = (omega1, atom_index); the separable family
    takes omega in R^d.
    """
    if isinstance(ms, ErmSpace):
        return float(ms.e(omega, s))
    omega1, j = omega
    return float(ms.e(np.asarray([omega1]), int(j), np.atleast_1d(s))[0])


def eval_l(ms, omega) -> float:
    if isinstance(ms, ErmSpace):
        return float(ms.l(omega))
    omega1, j = omega
    return float(ms.l(np.asarray([omega1]), int(j))[0])


# ---------------------------------------------------------------------------
# Verification integrals
# ---------------------------------------------------------------------------


def _atom_pair_integral(ms, s, t, order: int) -> float:
    """Exact sum over atoms of the scalar integral of e(.,s)*e(.,t)."""
    total = 0.0
    for j, a in enumerate(ms.atoms):
        ps, pt = float(np.dot(a.x, s)), float(np.dot(a.x, t))
        fun = lambda w: ms.e(w, j, s) * ms.e(w, j, t)  # noqa: E731
        total += a.w * _piecewise_gl(fun, [0.0, ps, pt], order)
    return total


def _atom_mean_integral(ms, s, order: int) -> float:
    total = 0.0
    for j, a in enumerate(ms.atoms):
        ps = float(np.dot(a.x, s))
        T = ms.trunc_radius(a)
        fun = lambda w: ms.e(w, j, s) * ms.l(w, j)  # noqa: E731
        total += a.w * _piecewise_gl(fun, [-T, 0.0, ps, T], order)
    return total


def _erm_marginal_factor(ms: ErmSpace, free: int) -> float:
    """Lebesgue mass of the coordinates integrated out as constants."""
    return (2.0 * ms.N) ** (ms.d - free)


def _erm_pair_integral(ms: ErmSpace, s, t, order: int, include_cross: bool = True) -> float:
    s = np.atleast_1d(np.asarray(s, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    a, b = np.cbrt(s), np.cbrt(t)
    pref = 24.0 * ms.N * ms._u_density()
    total = 0.0
    for ell in range(ms.d):
        fun = lambda w: (w - a[ell] / 2) * _ind(w, a[ell]) * (w - b[ell] / 2) * _ind(w, b[ell])  # noqa: E731
        total += (
            pref
            * _erm_marginal_factor(ms, 1)
            * ms.f[ell]
            * _piecewise_gl(fun, [0.0, a[ell], b[ell]], order)
        )
    if include_cross and ms.d > 1:
        total += erm_cross_term_total(ms, s, t, order)
    return total


def erm_cross_term_total(ms: ErmSpace, s, t, order: int = 64) -> float:
    """Sum of the cross-coordinate contributions to the covariance integral.

    Vanishes analytically: each one-dimensional factor is antisymmetric
    about the midpoint of its indicator interval.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    a, b = np.cbrt(s), np.cbrt(t)
    pref = 24.0 * ms.N * ms._u_density()
    total = 0.0
    for ell in range(ms.d):
        for ellp in range(ms.d):
            if ell == ellp:
                continue
            g1 = _piecewise_gl(
                lambda w: (w - a[ell] / 2) * _ind(w, a[ell]), [0.0, a[ell]], order
            )
            g2 = _piecewise_gl(
                lambda w: (w - b[ellp] / 2) * _ind(w, b[ellp]), [0.0, b[ellp]], order
            )
            total += (
                pref
                * _erm_marginal_factor(ms, 2)
                * np.sqrt(ms.f[ell] * ms.f[ellp])
                * g1
                * g2
            )
    return total


def _erm_mean_integral(ms: ErmSpace, s, order: int) -> float:
    s = np.atleast_1d(np.asarray(s, dtype=float))
    a = np.cbrt(s)
    pref = np.sqrt(24.0 * ms.N * ms._u_density()) * np.sqrt(75.0 * ms.N * ms._u_density() / 2.0)
    signs = (-1.0) ** np.arange(1, ms.d + 1)
    total = 0.0
    for ell in range(ms.d):
        # same-coordinate term; cross terms vanish by antisymmetry of e's factor
        fun = lambda w: (w - a[ell] / 2) * _ind(w, a[ell]) * w**3 * np.abs(w)  # noqa: E731
        total += (
            pref
            * _erm_marginal_factor(ms, 1)
            * ms.f[ell]
            * signs[ell]
            * ms.p[ell]
            * _piecewise_gl(fun, [0.0, a[ell]], order)
        )
        for ellp in range(ms.d):
            if ellp == ell:
                continue
            g_e = _piecewise_gl(
                lambda w: (w - a[ell] / 2) * _ind(w, a[ell]), [0.0, a[ell]], order
            )
            g_l = _piecewise_gl(
                lambda w: w**3 * np.abs(w), [-ms.N, 0.0, ms.N], order
            )
            total += (
                pref
                * _erm_marginal_factor(ms, 2)
                * np.sqrt(ms.f[ell] * ms.f[ellp])
                * signs[ellp]
                * ms.p[ellp]
                * g_e
                * g_l
            )
    return total


def _mc_pair_integral(ms, s, t, quad: QuadratureSpec):
    rng = np.random.default_rng(quad.seed)
    n = quad.mc_size
    if isinstance(ms, ErmSpace):
        omegas = rng.uniform(-ms.N, ms.N, size=(n, ms.d))
        vals = np.array([ms.e(w, s) * ms.e(w, t) for w in omegas]) * (2 * ms.N) ** ms.d
        return float(np.mean(vals)), float(np.std(vals) / np.sqrt(n))
    est, var = 0.0, 0.0
    for j, a in enumerate(ms.atoms):
        L = max(ms.trunc_radius(a), abs(float(np.dot(a.x, s))), abs(float(np.dot(a.x, t))))
        w1 = rng.uniform(-L, L, size=n)
        vals = ms.e(w1, j, s) * ms.e(w1, j, t) * (2 * L)
        est += a.w * float(np.mean(vals))
        var += (a.w**2) * float(np.var(vals)) / n
    return est, float(np.sqrt(var))


def _mc_mean_integral(ms, s, quad: QuadratureSpec):
    rng = np.random.default_rng(quad.seed + 1)
    n = quad.mc_size
    if isinstance(ms, ErmSpace):
        omegas = rng.uniform(-ms.N, ms.N, size=(n, ms.d))
        vals = np.array([ms.e(w, s) * ms.l(w) for w in omegas]) * (2 * ms.N) ** ms.d
        return float(np.mean(vals)), float(np.std(vals) / np.sqrt(n))
    est, var = 0.0, 0.0
    for j, a in enumerate(ms.atoms):
        L = max(ms.trunc_radius(a), abs(float(np.dot(a.x, s))))
        w1 = rng.uniform(-L, L, size=n)
        vals = ms.e(w1, j, s) * ms.l(w1, j) * (2 * L)
        est += a.w * float(np.mean(vals))
        var += (a.w**2) * float(np.var(vals)) / n
    return est, float(np.sqrt(var))


def verify_cov_representation(ms, pairs, quad: QuadratureSpec = QuadratureSpec()):
    """Check the covariance integral identity over test point pairs.

    Returns (max_abs_error, table); table rows carry s, t, both sides, the
    error, and (MC mode) the quadrature standard error.
    """
    cov = ms.cov_spec()
    table = []
    for s, t in pairs:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        rhs = float(cov.pairwise(s, t)[0, 0])
        if quad.mode == "deterministic":
            if isinstance(ms, ErmSpace):
                lhs = _erm_pair_integral(ms, s, t, quad.order)
            else:
                lhs = _atom_pair_integral(ms, s, t, quad.order)
            se = 0.0
        else:
            lhs, se = _mc_pair_integral(ms, s, t, quad)
        table.append({"s": s.tolist(), "t": t.tolist(), "lhs": lhs, "rhs": rhs,
                      "error": abs(lhs - rhs), "se": se})
    return max(row["error"] for row in table), table


def verify_mean_representation(ms, points, quad: QuadratureSpec = QuadratureSpec()):
    """Check the mean integral identity over test points."""
    mean = ms.mean_spec()
    table = []
    for s in points:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        rhs = float(mean.evaluate(s)[0])
        if quad.mode == "deterministic":
            if isinstance(ms, ErmSpace):
                lhs = _erm_mean_integral(ms, s, quad.order)
            else:
                lhs = _atom_mean_integral(ms, s, quad.order)
            se = 0.0
        else:
            lhs, se = _mc_mean_integral(ms, s, quad)
        table.append({"s": s.tolist(), "lhs": lhs, "rhs": rhs,
                      "error": abs(lhs - rhs), "se": se})
    return max(row["error"] for row in table), table


def l2_norm_l(ms, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Squared L2 norm of l under the model-space measure; must be finite."""
    if isinstance(ms, ErmSpace):
        pref = 75.0 * ms.N * ms._u_density() / 2.0
        total = 0.0
        for ell in range(ms.d):
            fun = lambda w: (w**3 * np.abs(w)) ** 2  # noqa: E731
            total += (
                pref
                * _erm_marginal_factor(ms, 1)
                * ms.p[ell] ** 2
                * ms.f[ell]
                * _piecewise_gl(fun, [-ms.N, 0.0, ms.N], quad.order)
            )
            for ellp in range(ms.d):
                if ellp == ell:
                    continue
                g = _piecewise_gl(lambda w: w**3 * np.abs(w), [-ms.N, 0.0, ms.N], quad.order)
                total += (
                    pref
                    * _erm_marginal_factor(ms, 2)
                    * abs(ms.p[ell] * ms.p[ellp])
                    * np.sqrt(ms.f[ell] * ms.f[ellp])
                    * g
                    * g
                )
        norm = total
    else:
        norm = 0.0
        for j, a in enumerate(ms.atoms):
            T = ms.trunc_radius(a)
            fun = lambda w: ms.l(w, j) ** 2  # noqa: E731
            norm += a.w * _piecewise_gl(fun, [-T, 0.0, T], quad.order)
    if not np.isfinite(norm):
        raise ArithmeticError("l is not square integrable under the model measure")
    return float(norm)


def tensor_membership_check(mu_parts, N: float, scales=None, refinements: int = 6):
    """Finite-difference diagnostic for coordinatewise RKHS membership.

    For each one-dimensional mean part, estimates the squared-derivative
    integral by Riemann sums of difference quotients at matching scale h;
    the verdict is "membership-consistent" iff the estimates stabilize
    (relative change <= 5% across the last two refinements).  Heuristic,
    never conclusive: absolute continuity is not numerically decidable.
    """
    scales = scales if scales is not None else [1.0] * len(mu_parts)
    report = []
    for part, scale in zip(mu_parts, scales):
        ests = []
        for k in range(refinements):
            h = N / (64 * 2**k)
            grid = np.arange(-N, N, h)
            quot = (part(grid + h) - part(grid)) / h
            ests.append(float(np.sum(quot**2) * h / max(scale, 1e-300)))
        prev, last = ests[-2], ests[-1]
        rel = abs(last - prev) / max(abs(last), 1e-300)
        report.append(
            {
                "estimates": ests,
                "relative_change": rel,
                "verdict": "membership-consistent (non-conclusive)"
                if rel <= 0.05
                else "no convergence under refinement (non-conclusive)",
                "consistent": rel <= 0.05,
            }
        )
    return report
