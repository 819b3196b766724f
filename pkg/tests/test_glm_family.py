"""Family definitions: cumulants, slice geometry, likelihoods, and the MLE."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats
from scipy.special import expit, gammaln

from polyglm import (
    FAMILIES,
    GAUSSIAN,
    LOGISTIC,
    POISSON,
    Dataset,
    get_family,
    log_likelihood,
    mle,
)
from polyglm.errors import (
    DimensionMismatch,
    EmptySlice,
    NoConvergence,
    Singular,
)

ALL_FAMILIES = [GAUSSIAN, POISSON, LOGISTIC]

eta_values = st.floats(min_value=-20.0, max_value=20.0,
                       allow_nan=False, allow_infinity=False)


class TestDataset:
    """Input validation and derived quantities."""

    def test_defaults(self):
        d = Dataset(np.eye(3), np.arange(3.0))
        np.testing.assert_array_equal(d.offset, np.zeros(3))
        assert d.names == ("x0", "x1", "x2")
        assert (d.n, d.p) == (3, 3)

    def test_linear_predictor_includes_offset(self):
        d = Dataset(np.array([[1.0], [2.0]]), np.zeros(2),
                    offset=np.array([10.0, 20.0]))
        np.testing.assert_allclose(d.linear_predictor([3.0]), [13.0, 26.0])

    def test_validation(self):
        with pytest.raises(DimensionMismatch):
            Dataset(np.eye(2), np.zeros(3))
        with pytest.raises(DimensionMismatch):
            Dataset(np.eye(2), np.zeros(2), offset=np.zeros(3))
        with pytest.raises(DimensionMismatch):
            Dataset(np.array([[np.nan, 0.0], [0.0, 1.0]]), np.zeros(2))
        with pytest.raises(DimensionMismatch):
            Dataset(np.eye(2), np.zeros(2), names=("only_one",))

    def test_defensive_copy(self):
        X = np.eye(2)
        d = Dataset(X, np.zeros(2))
        X[0, 0] = 5.0
        assert d.X[0, 0] == 1.0


class TestCumulants:
    """Known values, derivative identities, and convexity."""

    def test_values_at_zero(self):
        assert GAUSSIAN.psi(0.0) == 0.0
        assert POISSON.psi(0.0) == 1.0
        assert LOGISTIC.psi(0.0) == pytest.approx(math.log(2.0))
        for fam in ALL_FAMILIES:
            assert fam.psi_inf == 0.0

    @pytest.mark.parametrize("fam", ALL_FAMILIES, ids=lambda f: f.name)
    @given(v=eta_values)
    def test_first_derivative_matches_finite_differences(self, fam, v):
        h = 1e-5 * max(1.0, abs(v))
        fd = (fam.psi(v + h) - fam.psi(v - h)) / (2.0 * h)
        assert fam.dpsi(v) == pytest.approx(fd, rel=1e-5, abs=1e-7)

    @pytest.mark.parametrize("fam", ALL_FAMILIES, ids=lambda f: f.name)
    @given(v=eta_values)
    def test_second_derivative_positive(self, fam, v):
        h = 1e-4 * max(1.0, abs(v))
        fd = (fam.dpsi(v + h) - fam.dpsi(v - h)) / (2.0 * h)
        dd = fam.ddpsi(v)
        assert dd > 0.0
        assert dd == pytest.approx(fd, rel=1e-4, abs=1e-8)

    def test_family_registry(self):
        assert set(FAMILIES) == {"gaussian", "poisson", "logistic"}
        assert get_family("poisson") is POISSON
        with pytest.raises(KeyError):
            get_family("gamma")


class TestSliceIntervals:
    """The interval {v : psi(v) <= s} is exact at its finite endpoints."""

    @pytest.mark.parametrize("fam", ALL_FAMILIES, ids=lambda f: f.name)
    @given(eta=eta_values, e=st.floats(min_value=1e-6, max_value=10.0))
    def test_interval_contains_current_point_and_is_tight(self, fam, eta, e):
        s = float(fam.psi(eta)) + e
        lo, hi = fam.slice_interval(np.array([s]))
        lo, hi = float(lo[0]), float(hi[0])
        assert lo <= eta <= hi
        # tightness: the finite endpoints sit on the level set
        assert fam.psi(hi) == pytest.approx(s, rel=1e-9, abs=1e-9)
        if np.isfinite(lo):
            assert fam.psi(lo) == pytest.approx(s, rel=1e-9, abs=1e-9)
        # and a point just beyond the endpoint leaves the slice
        assert fam.psi(hi + 1e-3 * max(1.0, abs(hi))) > s

    def test_gaussian_interval_is_symmetric(self):
        lo, hi = GAUSSIAN.slice_interval(np.array([2.0]))
        np.testing.assert_allclose(lo, -hi)
        np.testing.assert_allclose(hi, [2.0])

    def test_poisson_interval_is_one_sided(self):
        lo, hi = POISSON.slice_interval(np.array([np.e]))
        assert np.isneginf(lo[0])
        np.testing.assert_allclose(hi, [1.0])

    def test_logistic_large_levels_do_not_overflow(self):
        s = np.array([500.0, 1000.0])
        lo, hi = LOGISTIC.slice_interval(s)
        assert np.all(np.isfinite(hi))
        np.testing.assert_allclose(hi, s)  # exact at double precision

    def test_level_at_infimum_rejected(self):
        for fam in ALL_FAMILIES:
            with pytest.raises(EmptySlice):
                fam.slice_interval(np.array([0.0]))

    def test_response_checks(self):
        POISSON.check_response(np.array([0.0, 3.0]))
        LOGISTIC.check_response(np.array([0.0, 1.0]))
        GAUSSIAN.check_response(np.array([-2.5, 7.0]))
        with pytest.raises(DimensionMismatch):
            POISSON.check_response(np.array([1.5]))
        with pytest.raises(DimensionMismatch):
            POISSON.check_response(np.array([-1.0]))
        with pytest.raises(DimensionMismatch):
            LOGISTIC.check_response(np.array([0.0, 2.0]))


class TestLogLikelihood:
    """Agreement with reference densities up to beta-free constants."""

    def test_poisson_matches_reference_pmf(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((20, 2))
        beta = np.array([0.3, -0.5])
        y = rng.poisson(np.exp(X @ beta)).astype(float)
        data = Dataset(X, y)
        ours = log_likelihood(POISSON, data, beta)
        lam = np.exp(X @ beta)
        ref = stats.poisson.logpmf(y, lam).sum() + gammaln(y + 1.0).sum()
        assert ours == pytest.approx(ref, rel=1e-12)

    def test_logistic_matches_reference_pmf(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((30, 2))
        beta = np.array([0.8, 0.1])
        y = (rng.uniform(size=30) < expit(X @ beta)).astype(float)
        data = Dataset(X, y)
        ours = log_likelihood(LOGISTIC, data, beta)
        ref = stats.bernoulli.logpmf(y.astype(int), expit(X @ beta)).sum()
        assert ours == pytest.approx(ref, rel=1e-12)

    def test_gaussian_matches_reference_pdf(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((15, 2))
        beta = np.array([1.0, -1.0])
        y = X @ beta + rng.standard_normal(15)
        data = Dataset(X, y)
        ours = log_likelihood(GAUSSIAN, data, beta)
        eta = X @ beta
        ref = stats.norm.logpdf(y, eta).sum() \
            + 0.5 * float(y @ y) + 0.5 * 15 * math.log(2.0 * math.pi)
        assert ours == pytest.approx(ref, rel=1e-12)

    def test_offset_shifts_the_predictor(self):
        X = np.ones((4, 1))
        y = np.array([1.0, 2.0, 0.0, 3.0])
        off = np.array([0.5, -0.5, 0.0, 1.0])
        with_off = log_likelihood(POISSON, Dataset(X, y, offset=off), [0.2])
        manual = float(y @ (0.2 + off) - np.exp(0.2 + off).sum())
        assert with_off == pytest.approx(manual, rel=1e-12)


class TestMle:
    """Newton-Raphson fits against closed forms and grid searches."""

    def test_poisson_intercept_only_closed_form(self):
        y = np.array([1.0, 2.0, 3.0, 2.0])
        data = Dataset(np.ones((4, 1)), y)
        beta, fisher = mle(POISSON, data)
        assert beta[0] == pytest.approx(math.log(2.0), abs=1e-10)
        assert fisher[0, 0] == pytest.approx(4 * 2.0, abs=1e-8)

    def test_poisson_offset_closed_form(self):
        """With offset log(E) the intercept-only rate is sum(y)/sum(E)."""
        y = np.array([3.0, 0.0, 5.0])
        expo = np.array([2.0, 1.0, 4.0])
        data = Dataset(np.ones((3, 1)), y, offset=np.log(expo))
        beta, _ = mle(POISSON, data)
        assert beta[0] == pytest.approx(math.log(y.sum() / expo.sum()),
                                        abs=1e-8)

    def test_gaussian_mle_is_least_squares(self):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((25, 3))
        y = rng.standard_normal(25)
        beta, fisher = mle(GAUSSIAN, data := Dataset(X, y))
        np.testing.assert_allclose(beta, np.linalg.lstsq(X, y, rcond=None)[0],
                                   atol=1e-9)
        np.testing.assert_allclose(fisher, X.T @ X, atol=1e-9)
        assert data.n == 25

    def test_logistic_matches_grid_search(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(40)
        y = (rng.uniform(size=40) < expit(1.2 * x)).astype(float)
        data = Dataset(x[:, None], y)
        beta, _ = mle(LOGISTIC, data)
        grid = np.linspace(-4.0, 4.0, 8001)
        lls = np.array([log_likelihood(LOGISTIC, data, [b]) for b in grid])
        assert beta[0] == pytest.approx(grid[lls.argmax()], abs=2e-3)

    def test_rank_deficient_design_rejected(self):
        X = np.column_stack([np.ones(5), np.ones(5)])
        with pytest.raises(Singular):
            mle(GAUSSIAN, Dataset(X, np.zeros(5)))

    def test_exhausted_iteration_budget_raises_with_last_iterate(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal(40)
        y = (rng.uniform(size=40) < expit(1.2 * x)).astype(float)
        with pytest.raises(NoConvergence) as info:
            mle(LOGISTIC, Dataset(x[:, None], y), max_iter=1)
        assert info.value.last_iterate is not None
        assert info.value.grad_norm > 0
