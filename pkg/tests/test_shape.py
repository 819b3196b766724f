"""Bernstein bases, monotonicity constraint systems, shape-model builders,
and DIC-based degree selection."""

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import comb

from polyglm import (
    BernsteinSpec,
    SamplerConfig,
    additive_monotone_model,
    bernstein_design,
    bimonotone_constraint_matrix,
    monotone_constraint_matrix,
    select_degree_by_dic,
    tensor_bimonotone_model,
    univariate_monotone_model,
)
from polyglm.errors import DimensionMismatch, OutOfRange


class TestBernsteinDesign:
    """The basis matrix itself."""

    @given(
        st.lists(st.floats(0.0, 1.0), min_size=1, max_size=20),
        st.integers(0, 8),
    )
    def test_partition_of_unity(self, xs, degree):
        B = bernstein_design(xs, degree)
        assert B.shape == (len(xs), degree + 1)
        np.testing.assert_allclose(B.sum(axis=1), 1.0, atol=1e-12)
        assert B.min() >= 0.0

    def test_endpoint_rows_are_unit_vectors(self):
        B = bernstein_design([0.0, 1.0], 4)
        np.testing.assert_allclose(B[0], np.eye(5)[0], atol=1e-15)
        np.testing.assert_allclose(B[1], np.eye(5)[4], atol=1e-15)

    def test_cubic_values_by_hand(self):
        x = 0.4
        B = bernstein_design([x], 3)[0]
        expected = [comb(3, k) * x ** k * (1 - x) ** (3 - k) for k in range(4)]
        np.testing.assert_allclose(B, expected, atol=1e-14)
        np.testing.assert_allclose(B, [0.216, 0.432, 0.288, 0.064], atol=1e-12)

    def test_degree_zero_is_constant(self):
        np.testing.assert_array_equal(bernstein_design([0.2, 0.9], 0),
                                      np.ones((2, 1)))

    def test_rejects_out_of_range(self):
        for bad in ([-0.01], [1.01], [np.nan]):
            with pytest.raises(OutOfRange):
                bernstein_design(bad, 2)
        with pytest.raises(DimensionMismatch):
            bernstein_design([0.5], -1)


class TestMonotoneConstraintMatrix:
    def test_first_difference_rows(self):
        cs = monotone_constraint_matrix(3)
        assert cs.R.shape == (3, 4) and cs.num_equality == 0
        np.testing.assert_array_equal(
            cs.R,
            [[-1, 1, 0, 0], [0, -1, 1, 0], [0, 0, -1, 1]],
        )
        assert cs.satisfies(np.array([0.0, 1.0, 1.0, 2.0]))
        assert not cs.satisfies(np.array([0.0, 1.0, 0.5, 2.0]))

    def test_decreasing_flips_sign(self):
        cs = monotone_constraint_matrix(2, increasing=False)
        assert cs.satisfies(np.array([2.0, 1.0, 0.0]))
        assert not cs.satisfies(np.array([0.0, 1.0, 2.0]))

    def test_increasing_coefficients_give_increasing_function(self):
        # the property that motivates the constraint rows
        rng = np.random.default_rng(0)
        coef = np.cumsum(rng.uniform(0.0, 1.0, 6))
        grid = np.linspace(0.0, 1.0, 200)
        values = bernstein_design(grid, 5) @ coef
        assert np.all(np.diff(values) >= -1e-12)

    def test_needs_degree_at_least_one(self):
        with pytest.raises(DimensionMismatch):
            monotone_constraint_matrix(0)


class TestBimonotoneConstraintMatrix:
    def test_degree_one_rows(self):
        cs = bimonotone_constraint_matrix(1)
        # coefficient order (0,0), (0,1), (1,0), (1,1)
        assert cs.R.shape == (4, 4)
        np.testing.assert_array_equal(
            cs.R,
            [
                [-1, 0, 1, 0],   # (1,0) - (0,0) along input 1
                [0, -1, 0, 1],   # (1,1) - (0,1)
                [-1, 1, 0, 0],   # (0,1) - (0,0) along input 2
                [0, 0, -1, 1],   # (1,1) - (1,0)
            ],
        )
        assert np.linalg.matrix_rank(cs.R) == 3

    def test_row_count_and_structure(self):
        cs = bimonotone_constraint_matrix(2)
        assert cs.R.shape == (12, 9)
        np.testing.assert_array_equal(cs.R.sum(axis=1), np.zeros(12))
        assert np.all(np.abs(cs.R).sum(axis=1) == 2)

    def test_grid_increasing_in_both_satisfies(self):
        cs = bimonotone_constraint_matrix(2)
        k1, k2 = np.meshgrid(np.arange(3), np.arange(3), indexing="ij")
        good = (2.0 * k1 + k2).ravel()
        assert cs.satisfies(good)
        bad = good.copy()
        bad[4] = 10.0  # spike in the middle breaks both directions
        assert not cs.satisfies(bad)


class TestBernsteinSpec:
    def test_from_data_and_rescale(self):
        spec = BernsteinSpec.from_data([2.0, 6.0, 4.0], degree=3)
        assert (spec.lo, spec.hi) == (2.0, 6.0)
        np.testing.assert_allclose(spec.rescale([2.0, 4.0, 6.0]),
                                   [0.0, 0.5, 1.0])
        np.testing.assert_allclose(spec.design([4.0]),
                                   bernstein_design([0.5], 3))

    def test_refuses_extrapolation(self):
        spec = BernsteinSpec(degree=2, lo=0.0, hi=1.0)
        with pytest.raises(OutOfRange):
            spec.rescale([1.5])

    def test_degenerate_range_rejected(self):
        with pytest.raises(DimensionMismatch):
            BernsteinSpec(degree=2, lo=1.0, hi=1.0)


class TestUnivariateMonotoneModel:
    def setup_method(self):
        self.x = np.linspace(1.0, 3.0, 25)
        self.model = univariate_monotone_model(self.x, degree=4)

    def test_design_layout(self):
        m = self.model
        assert m.design.shape == (25, 5)
        np.testing.assert_array_equal(m.design[:, 0], np.ones(25))
        assert m.names == ("intercept", "f_b1", "f_b2", "f_b3", "f_b4")
        assert m.slices == {"f": slice(1, 5)}
        # f is pinned to zero at the left edge of the training range
        np.testing.assert_allclose(m.design[0], [1, 0, 0, 0, 0], atol=1e-15)

    def test_constraints_ignore_intercept(self):
        cs = self.model.cset
        assert cs.R.shape == (4, 5)
        np.testing.assert_array_equal(cs.R[:, 0], np.zeros(4))
        # any intercept with increasing f-coefficients is feasible
        assert cs.satisfies(np.array([-7.0, 0.1, 0.2, 0.3, 0.4]))
        assert not cs.satisfies(np.array([0.0, 0.2, 0.1, 0.3, 0.4]))

    def test_feasible_draws_give_monotone_component(self):
        rng = np.random.default_rng(1)
        increments = rng.uniform(0.0, 1.0, (20, 4))
        coefs = np.hstack([rng.standard_normal((20, 1)),
                           np.cumsum(increments, axis=1)])
        assert all(self.model.cset.satisfies(c) for c in coefs)
        grid = np.linspace(1.0, 3.0, 120)
        values = self.model.component_values(coefs, grid, "f")
        assert values.shape == (20, 120)
        assert np.all(np.diff(values, axis=1) >= -1e-10)
        np.testing.assert_allclose(values[:, 0], 0.0, atol=1e-12)

    def test_decreasing_variant(self):
        model = univariate_monotone_model(self.x, degree=3, increasing=False)
        coef = np.array([5.0, -0.5, -1.0, -1.5])
        assert model.cset.satisfies(coef)
        vals = model.component_values(coef, np.linspace(1.0, 3.0, 60), "f")
        assert np.all(np.diff(vals) <= 1e-12)

    def test_dataset_carries_names(self):
        y = np.zeros(25)
        ds = self.model.dataset(y)
        assert ds.names == self.model.names
        np.testing.assert_array_equal(ds.X, self.model.design)


class TestAdditiveMonotoneModel:
    def setup_method(self):
        rng = np.random.default_rng(2)
        self.x1 = rng.uniform(0.0, 10.0, 30)
        self.x2 = rng.uniform(-1.0, 1.0, 30)
        self.model = additive_monotone_model(self.x1, self.x2, 3, 2)

    def test_layout(self):
        m = self.model
        assert m.design.shape == (30, 6)
        assert m.names == ("intercept", "f1_b1", "f1_b2", "f1_b3",
                           "f2_b1", "f2_b2")
        assert m.slices == {"f1": slice(1, 4), "f2": slice(4, 6)}

    def test_constraint_blocks_are_disjoint(self):
        R = self.model.cset.R
        assert R.shape == (5, 6)
        np.testing.assert_array_equal(R[:, 0], np.zeros(5))
        np.testing.assert_array_equal(R[:3, 4:], np.zeros((3, 2)))
        np.testing.assert_array_equal(R[3:, 1:4], np.zeros((2, 3)))

    def test_components_evaluate_separately(self):
        coef = np.array([1.0, 0.2, 0.4, 0.9, 0.1, 0.3])
        assert self.model.cset.satisfies(coef)
        g1 = np.linspace(self.x1.min(), self.x1.max(), 50)
        v1 = self.model.component_values(coef, g1, "f1")
        assert np.all(np.diff(v1) >= -1e-12)
        g2 = np.linspace(self.x2.min(), self.x2.max(), 50)
        v2 = self.model.component_values(coef, g2, "f2")
        assert np.all(np.diff(v2) >= -1e-12)
        assert v1[0] == pytest.approx(0.0, abs=1e-12)

    def test_mixed_directions(self):
        model = additive_monotone_model(self.x1, self.x2, 2, 2,
                                        increasing=(True, False))
        coef = np.array([0.0, 0.5, 1.0, -0.5, -1.0])
        assert model.cset.satisfies(coef)
        assert not model.cset.satisfies(np.array([0.0, 0.5, 1.0, 0.5, 1.0]))


class TestTensorBimonotoneModel:
    def setup_method(self):
        rng = np.random.default_rng(3)
        self.x1 = rng.uniform(0.0, 1.0, 40)
        self.x2 = rng.uniform(0.0, 1.0, 40)
        self.model = tensor_bimonotone_model(self.x1, self.x2, degree=2)

    def test_layout(self):
        m = self.model
        assert m.design.shape == (40, 9)  # intercept + (3*3 - 1) tensor columns
        assert m.names[0] == "intercept"
        assert m.names[1] == "t_0_1"
        assert m.names[-1] == "t_2_2"
        assert len(m.names) == 9
        assert m.slices == {"surface": slice(1, 9)}

    def test_feasible_surface_is_bimonotone(self):
        k1, k2 = np.meshgrid(np.arange(3), np.arange(3), indexing="ij")
        tensor_coef = (k1 + k2).ravel().astype(float)  # zero at (0, 0)
        coef = np.concatenate([[0.7], tensor_coef[1:]])
        assert self.model.cset.satisfies(coef)

        g1 = np.linspace(self.x1.min(), self.x1.max(), 12)
        g2 = np.linspace(self.x2.min(), self.x2.max(), 12)
        along_x1 = np.column_stack([g1, np.full_like(g1, 0.4)])
        along_x2 = np.column_stack([np.full_like(g2, 0.4), g2])
        v1 = self.model.component_values(coef, along_x1, "surface")
        v2 = self.model.component_values(coef, along_x2, "surface")
        assert np.all(np.diff(v1) >= -1e-10)
        assert np.all(np.diff(v2) >= -1e-10)

    def test_matrix_of_draws(self):
        coefs = np.zeros((5, 9))
        coefs[:, 0] = np.arange(5)
        grid = np.column_stack([np.full(7, 0.5), np.linspace(0.1, 0.9, 7)])
        vals = self.model.component_values(coefs, grid, "surface")
        assert vals.shape == (5, 7)
        np.testing.assert_allclose(vals, 0.0, atol=1e-14)  # intercept excluded


class TestSelectDegreeByDic:
    """Degree selection on data with a sharp sigmoidal trend: a straight
    line underfits badly, so the cubic wins by a wide DIC margin."""

    def _fixture(self):
        rng = np.random.default_rng(7)
        x = np.sort(rng.uniform(0.0, 1.0, 80))
        f = 1.0 / (1.0 + np.exp(-12.0 * (x - 0.5)))
        y = f + rng.normal(0.0, 0.15, 80)
        return x, y

    def test_cubic_beats_line(self):
        x, y = self._fixture()

        def builder(N):
            m = univariate_monotone_model(x, N)
            return m.dataset(y), m.cset

        cfg = SamplerConfig(n_iter=3000, burn_in=500, thin=1, seed=3,
                            n_chains=1)
        best, table = select_degree_by_dic(builder, [1, 3], cfg=cfg)
        assert best == 3
        assert [N for N, _ in table] == [1, 3]
        dic_by_degree = dict(table)
        assert dic_by_degree[3] < dic_by_degree[1] - 10.0

    def test_table_preserves_input_order(self):
        x, y = self._fixture()

        def builder(N):
            m = univariate_monotone_model(x, N)
            return m.dataset(y), m.cset

        cfg = SamplerConfig(n_iter=800, burn_in=200, thin=1, seed=5,
                            n_chains=1)
        best, table = select_degree_by_dic(builder, [3, 1], cfg=cfg)
        assert [N for N, _ in table] == [3, 1]
        assert best in (1, 3)

    def test_no_candidates_rejected(self):
        with pytest.raises(DimensionMismatch):
            select_degree_by_dic(lambda N: None, [])
