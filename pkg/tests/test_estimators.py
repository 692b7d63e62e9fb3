"""Estimator tests: every fitter is checked against exhaustive brute force."""

import itertools
import warnings

import numpy as np
import pytest

from gpargmax import estimators as E
from gpargmax import kernels as K
from gpargmax.rng import RngPolicy


def brute_maxscore(data, grid):
    signs = 2 * data["y"] - 1
    scores = [np.sum(signs * ((data["w"] + data["X"] @ g) >= 0)) for g in grid]
    i = int(np.argmax(scores))
    return grid[i], scores[i]


def brute_erm(data, d):
    x, y = data["x"], data["y"]
    cands = np.concatenate([[0.0], np.unique(x)])
    best = (np.inf, None)
    if d == 1:
        combos = ((c,) for c in cands)
    else:
        combos = (t for t in itertools.product(cands, repeat=d) if t[0] <= t[1])
    for theta in combos:
        miss = np.sum(E.erm_classify(np.array(theta), x) != y)
        if miss < best[0]:
            best = (miss, theta)
    return best


def brute_threshreg(data, grid):
    X, q, W, y = data["X"], data["q"], data["W"], data["y"]
    best = (np.inf, None)
    for g in grid:
        Z = np.hstack([X, X * (q > W @ g)[:, None]])
        if np.linalg.matrix_rank(Z) < Z.shape[1]:
            continue
        coef, *_ = np.linalg.lstsq(Z, y, rcond=None)
        rss = float(np.sum((y - Z @ coef) ** 2))
        if rss < best[0] - 1e-12:
            best = (rss, g)
    return best


MAXSCORE_DGP = E.MaxScoreDGP((0.5,), ((0.5, (1.0,)), (0.5, (-1.0,))))
THRESH_DGP = E.ThreshRegDGP(
    (1.0, 0.5),
    (1.0, 0.0),
    (0.0,),
    ((0.5, (1.0, 0.0)), (0.5, (0.0, 1.0))),
    ((1.0, (1.0,)),),
)


class TestMaxScore:
    def test_matches_brute_force(self):
        rp = RngPolicy(99).child("ms")
        grid = np.linspace(-2, 2, 81).reshape(-1, 1)
        for r in range(30):
            data = E.gen_maxscore(MAXSCORE_DGP, 10, rp.substream(r))
            fit = E.fit_maxscore(data, grid)
            theta, score = brute_maxscore(data, grid)
            assert fit.objective == score
            assert np.array_equal(fit.theta, theta)

    def test_empty_grid_rejected(self):
        data = E.gen_maxscore(MAXSCORE_DGP, 5, RngPolicy(0).substream(0))
        with pytest.raises(ValueError):
            E.fit_maxscore(data, np.empty((0, 1)))


class TestErm:
    def test_d1_matches_brute_force(self):
        rp = RngPolicy(99).child("erm1")
        dgp = E.ERMDGP((0.5,))
        for r in range(30):
            data = E.gen_erm(dgp, 12, rp.substream(r))
            fit = E.fit_erm(data, 1)
            best_miss, _ = brute_erm(data, 1)
            assert fit.objective <= best_miss
            assert fit.objective == E.erm_objective(fit.theta, data)

    def test_d2_matches_brute_force(self):
        rp = RngPolicy(99).child("erm2")
        dgp = E.ERMDGP((0.3, 0.7))
        for r in range(30):
            data = E.gen_erm(dgp, 12, rp.substream(r))
            fit = E.fit_erm(data, 2)
            best_miss, _ = brute_erm(data, 2)
            assert fit.theta[0] <= fit.theta[1]
            assert fit.objective == E.erm_objective(fit.theta, data)
            assert fit.objective <= best_miss

    def test_classifier_alternates(self):
        labels = E.erm_classify(np.array([0.3, 0.7]), np.array([0.1, 0.5, 0.9]))
        assert np.array_equal(labels, [-1.0, 1.0, -1.0])

    def test_theta0_ordering_enforced(self):
        with pytest.raises(ValueError):
            E.ERMDGP((0.7, 0.3))

    def test_d3_not_supported(self):
        data = E.gen_erm(E.ERMDGP((0.5,)), 8, RngPolicy(0).substream(0))
        with pytest.raises(ValueError):
            E.fit_erm(data, 3)


class TestThreshReg:
    def test_matches_brute_force(self):
        rp = RngPolicy(99).child("tr")
        grid = np.linspace(-1, 1, 21).reshape(-1, 1)
        for r in range(30):
            data = E.gen_threshreg(THRESH_DGP, 12, rp.substream(r))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                fit = E.fit_threshreg(data, grid)
            rss, theta = brute_threshreg(data, grid)
            assert fit.objective == pytest.approx(rss, abs=1e-8)
            assert np.array_equal(fit.theta, theta)

    def test_delta_shrinks_at_rate(self):
        assert np.allclose(THRESH_DGP.delta_n(16), 0.5 * THRESH_DGP.delta_bar)

    def test_delta_bar_must_be_unit(self):
        with pytest.raises(ValueError):
            E.ThreshRegDGP(
                (1.0,), (2.0,), (0.0,), ((1.0, (1.0,)),), ((1.0, (1.0,)),)
            )


class TestLimitSpecs:
    def test_maxscore_types_and_curvature(self):
        mean, cov = E.limit_specs(MAXSCORE_DGP)
        assert isinstance(mean, K.Quadratic)
        assert isinstance(cov, K.MixtureBM)
        # V = sum p * fu0 * fw * x x' with fw = phi(-x theta0)
        phi = lambda z: np.exp(-z * z / 2) / np.sqrt(2 * np.pi)
        fu0 = phi(0.0)
        expect = 0.5 * fu0 * phi(-0.5) + 0.5 * fu0 * phi(0.5)
        assert mean.V[0, 0] == pytest.approx(expect)

    def test_erm_separable(self):
        mean, cov = E.limit_specs(E.ERMDGP((0.3, 0.7)))
        assert isinstance(mean, K.SeparableQuadratic)
        assert isinstance(cov, K.SeparableBM)
        assert np.all(np.asarray(mean.kappa) > 0)

    def test_threshreg_scale_enters_mean_and_cov(self):
        mean, cov = E.limit_specs(THRESH_DGP)
        assert isinstance(mean, K.ThreshRegAbs)
        assert isinstance(cov, K.MixtureBM)
        scale = float(THRESH_DGP.delta_bar @ THRESH_DGP.Exx @ THRESH_DGP.delta_bar)
        atom = cov.atoms[0]
        assert atom.a == pytest.approx(scale * THRESH_DGP.u_sigma**2)
        assert atom.b == pytest.approx(scale)

    def test_rates(self):
        assert E.rate(MAXSCORE_DGP, 1000) == pytest.approx(10.0)
        assert E.rate(E.ERMDGP((0.5,)), 8) == pytest.approx(2.0)
        # n^(1-2a) with a = 0.25
        assert E.rate(THRESH_DGP, 10_000) == pytest.approx(100.0)


class TestSamplingLaw:
    def test_reps_floor(self):
        with pytest.raises(ValueError):
            E.sampling_law(E.ERMDGP((0.5,)), 100, 50, RngPolicy(0))

    def test_draws_are_rescaled_and_deterministic(self):
        dgp = E.ERMDGP((0.5,))
        a = E.sampling_law(dgp, 200, 100, RngPolicy(21))
        b = E.sampling_law(dgp, 200, 100, RngPolicy(21))
        assert np.array_equal(a.draws, b.draws)
        assert np.max(np.abs(a.draws)) <= E.rate(dgp, 200)  # theta in [0, 1]


class TestPercentile:
    def test_order_statistics_by_hand(self):
        draws = np.arange(1.0, 21.0)  # 1..20
        assert E.percentile_quantile(draws, 0.5) == 10.0
        assert E.percentile_quantile(draws, 0.501) == 11.0
        assert E.percentile_quantile(draws, 0.05) == 1.0
        assert E.percentile_quantile(draws, 0.95) == 19.0

    def test_unsorted_input_allowed(self):
        rng = np.random.default_rng(0)
        draws = rng.permutation(np.arange(1.0, 21.0))
        assert E.percentile_quantile(draws, 0.25) == 5.0

    def test_interval_endpoints(self):
        draws = np.arange(1.0, 21.0)
        lo, hi = E.percentile_interval(5.0, draws, 0.1)
        # ceil(0.95*20) = 19th order statistic, ceil(0.05*20) = 1st
        assert (lo, hi) == (5.0 - 19.0, 5.0 - 1.0)
        assert lo <= hi

    def test_interval_rejects_bad_alpha(self):
        with pytest.raises(ValueError):
            E.percentile_interval(0.0, np.arange(1.0, 5.0), 1.5)

    def test_quantile_rejects_empty_or_bad_t(self):
        with pytest.raises(ValueError):
            E.percentile_quantile(np.array([]), 0.5)
        with pytest.raises(ValueError):
            E.percentile_quantile(np.arange(3.0), 1.0)


class TestSubsampling:
    def test_draws_are_rescaled_differences(self):
        dgp = E.ERMDGP((0.5,))
        data = E.gen_erm(dgp, 200, RngPolicy(5).substream(0))
        fit = lambda d: E.fit_erm(d, 1)
        rng = np.random.default_rng(7)
        draws = E.subsample_draws(data, 50, 40, fit, rng, np.array([1.0]), scale=2.0)
        assert draws.shape[0] == 40
        assert np.all(np.isfinite(draws))

    def test_m_bounds_checked(self):
        dgp = E.ERMDGP((0.5,))
        data = E.gen_erm(dgp, 20, RngPolicy(5).substream(0))
        with pytest.raises(ValueError):
            E.subsample_draws(
                data, 21, 5, lambda d: E.fit_erm(d, 1), np.random.default_rng(0), [1.0]
            )

    def test_failure_fraction_guard(self):
        dgp = E.ERMDGP((0.5,))
        data = E.gen_erm(dgp, 30, RngPolicy(5).substream(0))

        def flaky(d):
            raise RuntimeError("no fit")

        with pytest.raises(RuntimeError):
            E.subsample_draws(data, 10, 20, flaky, np.random.default_rng(0), [1.0])
