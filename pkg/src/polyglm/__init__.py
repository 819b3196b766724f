"""Bayesian regression with coefficients constrained to a polytope.

Linear models and canonical GLMs (gaussian, poisson, logistic) whose
coefficients satisfy linear inequalities ``R beta >= b``, optionally with
leading equality rows.  Sampling is exact-target MCMC: a coordinate Gibbs
sampler for truncated multivariate normals, and a product slice sampler
for the GLM likelihoods.
"""

from .analysis import SummaryReport, dic, ols, ridge, ridge_cv, summarize
from .constraints import (
    ConstraintSet,
    ReparamMap,
    eliminate_equalities,
    find_feasible_point,
    unconstrained,
    validate,
)
from .glm_family import (
    FAMILIES,
    GAUSSIAN,
    LOGISTIC,
    POISSON,
    Dataset,
    GlmFamily,
    get_family,
    log_likelihood,
    mle,
)
from .ingest import (
    build_fertilizer_dataset,
    build_shutdown_quadratic,
    build_shutdown_yearly,
    fertilizer_constraints,
    ingest_csv,
)
from .samplers import (
    ErgodicityEstimate,
    PosteriorSamples,
    PriorSpec,
    SamplerConfig,
    estimate_ergodicity_bound,
    fit_glm,
    fit_lm,
)
from .scenarios import ScenarioSpec, run_scenario, simulate_scenario
from .shape import (
    BernsteinSpec,
    ShapeModel,
    additive_monotone_model,
    bernstein_design,
    bimonotone_constraint_matrix,
    monotone_constraint_matrix,
    select_degree_by_dic,
    tensor_bimonotone_model,
    univariate_monotone_model,
)
from .tmvn import TmvnSpec, gibbs_sample, sample_truncated_std_normal

__version__ = "0.1.0"

__all__ = [
    "BernsteinSpec",
    "ConstraintSet",
    "Dataset",
    "ErgodicityEstimate",
    "FAMILIES",
    "GAUSSIAN",
    "GlmFamily",
    "LOGISTIC",
    "POISSON",
    "PosteriorSamples",
    "PriorSpec",
    "ReparamMap",
    "SamplerConfig",
    "ScenarioSpec",
    "ShapeModel",
    "SummaryReport",
    "TmvnSpec",
    "additive_monotone_model",
    "bernstein_design",
    "bimonotone_constraint_matrix",
    "build_fertilizer_dataset",
    "build_shutdown_quadratic",
    "build_shutdown_yearly",
    "dic",
    "fertilizer_constraints",
    "eliminate_equalities",
    "estimate_ergodicity_bound",
    "find_feasible_point",
    "fit_glm",
    "fit_lm",
    "get_family",
    "gibbs_sample",
    "ingest_csv",
    "log_likelihood",
    "mle",
    "monotone_constraint_matrix",
    "ols",
    "ridge",
    "ridge_cv",
    "run_scenario",
    "sample_truncated_std_normal",
    "select_degree_by_dic",
    "simulate_scenario",
    "summarize",
    "tensor_bimonotone_model",
    "unconstrained",
    "univariate_monotone_model",
    "validate",
]
