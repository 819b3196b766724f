"""Stock simulation scenarios: specs, data generation, and the
replicated estimator-comparison reports."""

import json

import numpy as np
import pytest

from polyglm import SamplerConfig, ScenarioSpec, run_scenario, simulate_scenario
from polyglm.errors import DimensionMismatch
from polyglm.scenarios import scenario_constraints, scenario_truth, simulate_one

FAST = SamplerConfig(n_iter=400, burn_in=100, thin=1, n_chains=1)


class TestScenarioSpec:
    def test_defaults_by_id(self):
        assert (ScenarioSpec("A1").n, ScenarioSpec("A1").rho) == (30, 0.5)
        assert (ScenarioSpec("A2").n, ScenarioSpec("A2").rho) == (20, 0.0)
        assert (ScenarioSpec("B").n, ScenarioSpec("B").rho) == (50, 0.5)
        assert (ScenarioSpec("C").n, ScenarioSpec("C").rho) == (100, 0.0)

    def test_overrides(self):
        spec = ScenarioSpec("A1", n=12, rho=0.2, replicates=7, seed=3)
        assert (spec.n, spec.rho, spec.replicates, spec.seed) == (12, 0.2, 7, 3)

    def test_validation(self):
        with pytest.raises(DimensionMismatch):
            ScenarioSpec("Z")
        with pytest.raises(DimensionMismatch):
            ScenarioSpec("A1", replicates=0)
        with pytest.raises(DimensionMismatch):
            ScenarioSpec("A1", rho=1.0)
        with pytest.raises(DimensionMismatch):
            ScenarioSpec("A1", rho=-0.1)


class TestTruthsAndConstraints:
    """Every scenario's true coefficient vector is feasible, so shrinkage
    toward the constraints cannot bias the comparison."""

    @pytest.mark.parametrize("sid,p,m,meq", [
        ("A1", 3, 2, 0),
        ("A2", 30, 5, 0),
        ("B", 4, 3, 1),
        ("C", 11, 11, 1),
    ])
    def test_dimensions_and_feasibility(self, sid, p, m, meq):
        spec = ScenarioSpec(sid)
        truth = scenario_truth(spec)
        cs = scenario_constraints(spec)
        assert truth.shape == (p,)
        assert cs.R.shape == (m, p)
        assert cs.num_equality == meq
        assert cs.satisfies(truth)

    def test_binding_rows_hold_exactly(self):
        b_truth = scenario_truth(ScenarioSpec("B"))
        assert b_truth[1:].sum() == pytest.approx(0.0)
        c_truth = scenario_truth(ScenarioSpec("C"))
        assert c_truth.sum() == pytest.approx(12.0)
        assert np.all(c_truth[:10] >= 0.9)


class TestSimulate:
    def test_replicates_are_reproducible(self):
        spec = ScenarioSpec("A1", replicates=5, seed=11)
        d1, _, _ = simulate_one(spec, 3)
        d2, _, _ = simulate_one(spec, 3)
        np.testing.assert_array_equal(d1.X, d2.X)
        np.testing.assert_array_equal(d1.y, d2.y)

    def test_replicate_stream_independent_of_count(self):
        a = ScenarioSpec("B", replicates=4, seed=2)
        b = ScenarioSpec("B", replicates=9, seed=2)
        da, _, _ = simulate_one(a, 3)
        db, _, _ = simulate_one(b, 3)
        np.testing.assert_array_equal(da.X, db.X)
        np.testing.assert_array_equal(da.y, db.y)

    def test_distinct_replicates_differ(self):
        spec = ScenarioSpec("C", replicates=2, seed=0)
        d0, _, _ = simulate_one(spec, 0)
        d1, _, _ = simulate_one(spec, 1)
        assert not np.array_equal(d0.X, d1.X)

    def test_simulate_scenario_length(self):
        spec = ScenarioSpec("A1", replicates=4, seed=1)
        out = simulate_scenario(spec)
        assert len(out) == 4
        d3, _, _ = simulate_one(spec, 3)
        np.testing.assert_array_equal(out[3][0].X, d3.X)

    def test_intercept_and_names(self):
        db, _, _ = simulate_one(ScenarioSpec("B", seed=5), 0)
        assert db.names == ("intercept", "x1", "x2", "x3")
        np.testing.assert_array_equal(db.X[:, 0], np.ones(50))
        da, _, _ = simulate_one(ScenarioSpec("A1", seed=5), 0)
        assert da.names == ("x1", "x2", "x3")

    def test_poisson_design_and_counts(self):
        dc, _, _ = simulate_one(ScenarioSpec("C", seed=5), 0)
        assert dc.X.min() >= -0.5 and dc.X.max() <= 0.5
        assert np.all(dc.y >= 0)
        np.testing.assert_array_equal(dc.y, np.round(dc.y))

    def test_gaussian_design_covariance_law(self):
        """Rows are N(0, S) with S the inverse of the rho^|i-j| matrix."""
        spec = ScenarioSpec("A1", n=6000, seed=9)
        data, _, _ = simulate_one(spec, 0)
        idx = np.arange(3)
        s0 = 0.5 ** np.abs(idx[:, None] - idx[None, :])
        expected = np.linalg.inv(s0)
        observed = data.X.T @ data.X / 6000
        np.testing.assert_allclose(observed, expected, atol=0.12)


class TestRunScenario:
    def test_report_schema_and_satisfaction(self):
        spec = ScenarioSpec("A1", replicates=3, seed=4)
        rep = run_scenario(spec, cfg=FAST)
        assert rep["scenario"] == "A1"
        assert rep["coefficients"] == ["x1", "x2", "x3"]
        assert rep["truth"] == [-1.0, -1.0, 1.0]
        assert rep["baseline_name"] == "ols"
        for side in ("bayes", "baseline"):
            block = rep[side]
            assert set(block) == {"mse", "variance", "mean_sel",
                                  "constraint_satisfaction"}
            assert set(block["mse"]) == {"x1", "x2", "x3"}
        # posterior means inherit feasibility from the audited draws
        assert rep["bayes"]["constraint_satisfaction"] == 1.0
        assert set(rep["ratios"]) == {"mse_baseline_over_bayes",
                                      "variance_baseline_over_bayes"}
        assert rep["sampler"] == {"n_iter": 400, "burn_in": 100,
                                  "thin": 1, "n_chains": 1}
        json.dumps(rep)  # report must be directly serialisable

    def test_equality_scenario_runs(self):
        spec = ScenarioSpec("B", replicates=2, seed=6)
        rep = run_scenario(spec, cfg=FAST)
        assert rep["baseline_name"] == "ols"
        assert rep["bayes"]["constraint_satisfaction"] == 1.0
        assert rep["bayes"]["mean_sel"] > 0

    def test_poisson_scenario_runs(self):
        spec = ScenarioSpec("C", n=60, replicates=2, seed=8)
        rep = run_scenario(spec, cfg=SamplerConfig(n_iter=300, burn_in=100,
                                                   thin=1, n_chains=1))
        assert rep["baseline_name"] == "glm-mle"
        assert rep["bayes"]["constraint_satisfaction"] == 1.0
        assert len(rep["coefficients"]) == 11

    def test_ridge_scenario_runs(self):
        spec = ScenarioSpec("A2", replicates=2, seed=10)
        rep = run_scenario(spec, cfg=FAST)
        assert rep["baseline_name"] == "ridge-cv"
        assert len(rep["coefficients"]) == 30
        assert rep["bayes"]["constraint_satisfaction"] == 1.0

    def test_threads_do_not_change_the_report(self):
        spec = ScenarioSpec("A1", replicates=2, seed=12)
        serial = run_scenario(spec, cfg=FAST, threads=1)
        parallel = run_scenario(spec, cfg=FAST, threads=2)
        assert json.dumps(serial, sort_keys=True) == json.dumps(parallel,
                                                                sort_keys=True)
