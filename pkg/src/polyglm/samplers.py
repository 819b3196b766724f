"""Posterior samplers for polytope-constrained regression coefficients.

Two models share one pattern: the coefficient vector carries a truncated
multivariate normal prior ``TN_p(mu1, sigma1)`` restricted to
``R beta >= b`` (with optional leading equality rows), and each update of
beta is a truncated-normal Gibbs sweep.

* :func:`fit_lm` - gaussian linear model ``y = X beta + eps`` with
  ``eps ~ N(0, sigma2 I)`` and a conjugate gamma prior on ``1/sigma2``.
  The full conditional of beta is again a truncated normal whose location
  and covariance blend the prior and the least-squares information; the
  full conditional of the noise precision is gamma.

* :func:`fit_glm` - canonical families via a product slice sampler: one
  auxiliary uniform per observation turns the likelihood factor
  ``exp{-psi(eta_i)}`` into an interval constraint on ``eta_i``, so beta's
  conditional is a truncated normal with covariance ``sigma1`` fixed and
  location ``mu1 + sigma1 X' y``, truncated to the user polytope plus the n
  slice intervals.  Slice levels are drawn on the log scale (the auxiliary
  uniforms are never materialised), which is immune to underflow of
  ``exp(-psi)``.

Equality rows are eliminated up front; sampling happens in the reduced
coordinate and draws are mapped back, so every returned row satisfies the
equalities to numerical precision.

Chains are seeded from ``(seed, chain_index)`` streams and never share
state; their retained draws are concatenated in chain order, making runs
reproducible given the config.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.linalg

from .constraints import (
    ConstraintSet,
    ReparamMap,
    eliminate_equalities,
    find_feasible_point,
    unconstrained,
    validate,
)
from .errors import DimensionMismatch, Infeasible, NotPositiveDefinite
from .glm_family import GAUSSIAN, Dataset, GlmFamily, mle
from .tmvn import CoordinateGibbs

AUDIT_TOL = 1e-8


@dataclass(frozen=True)
class PriorSpec:
    """Gaussian-part prior: ``beta ~ TN(mu1, sigma1)`` restricted to the
    constraint region, and (linear model only) ``1/sigma2 ~ Gamma(a, b)``.

    When the model carries equality constraints, the prior lives on the
    reduced coordinate, so ``mu1``/``sigma1`` must have the reduced
    dimension ``p - num_equality``.
    """

    mu1: np.ndarray
    sigma1: np.ndarray
    a: float = 0.01
    b: float = 0.01

    def __post_init__(self):
        mu1 = np.atleast_1d(np.array(self.mu1, dtype=float, copy=True))
        sigma1 = np.array(self.sigma1, dtype=float, copy=True)
        if sigma1.shape != (mu1.shape[0], mu1.shape[0]):
            raise DimensionMismatch(
                f"sigma1 has shape {sigma1.shape}, expected square matching mu1 ({mu1.shape[0]})"
            )
        if self.a <= 0 or self.b <= 0:
            raise DimensionMismatch("gamma hyperparameters a, b must be positive")
        mu1.setflags(write=False)
        sigma1.setflags(write=False)
        object.__setattr__(self, "mu1", mu1)
        object.__setattr__(self, "sigma1", sigma1)

    @property
    def dim(self) -> int:
        return self.mu1.shape[0]

    @classmethod
    def vague(cls, dim: int, c0: float = 100.0, a: float = 0.01, b: float = 0.01):
        """Flat-ish default: zero mean, ``c0**2 I`` covariance, small a = b."""
        return cls(np.zeros(dim), (c0 ** 2) * np.eye(dim), a, b)

    @classmethod
    def empirical_bayes(cls, fam: GlmFamily, data: Dataset):
        """Centre at the unconstrained MLE with inverse-information spread."""
        beta_hat, fisher = mle(fam, data)
        sigma1 = _spd_inverse(fisher, what="Fisher information")
        return cls(beta_hat, sigma1)


@dataclass(frozen=True)
class SamplerConfig:
    """Chain lengths and seeding.

    ``n_iter`` counts total sweeps per chain; the first ``burn_in`` are
    dropped and every ``thin``-th of the rest kept.  ``inner_sweeps`` is
    the number of coordinate sweeps applied inside each outer update.
    """

    n_iter: int = 12000
    burn_in: int = 2000
    thin: int = 2
    seed: int = 0
    n_chains: int = 2
    inner_sweeps: int = 1

    def __post_init__(self):
        if not (0 <= self.burn_in < self.n_iter):
            raise DimensionMismatch("need 0 <= burn_in < n_iter")
        if self.thin < 1 or self.n_chains < 1 or self.inner_sweeps < 1:
            raise DimensionMismatch("thin, n_chains and inner_sweeps must be >= 1")

    def chain_rng(self, chain: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=(chain,))
        )

    @property
    def retained_per_chain(self) -> int:
        return (self.n_iter - self.burn_in + self.thin - 1) // self.thin


@dataclass
class PosteriorSamples:
    """Retained draws in the original coefficient space.

    ``draws`` is (n_draws, p); ``sigma2_draws`` aligns with rows when the
    noise variance was sampled.  ``meta`` echoes the run configuration and
    records the constraint audit (every row is re-checked against the user
    constraint set at construction time; ``meta['audit_count']`` equals the
    number of rows).
    """

    draws: np.ndarray
    sigma2_draws: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]

    @property
    def p(self) -> int:
        return self.draws.shape[1]

    def mean(self) -> np.ndarray:
        return self.draws.mean(axis=0)


@dataclass(frozen=True)
class ErgodicityEstimate:
    """Monte Carlo estimate of the geometric-convergence bound of the
    product slice sampler: rate r <= 1 - h_hat, with naive standard error
    of the h estimate."""

    h_hat: float
    mc_se: float
    r_upper: float


def _spd_inverse(mat: np.ndarray, what: str = "matrix") -> np.ndarray:
    try:
        c, low = scipy.linalg.cho_factor(mat, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"{what} is not positive definite") from exc
    return scipy.linalg.cho_solve((c, low), np.eye(mat.shape[0]))


def _chol_lower(mat: np.ndarray, what: str) -> np.ndarray:
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"{what} is not positive definite") from exc


@dataclass(frozen=True)
class _WorkingModel:
    """Problem after optional equality elimination: design/offset/constraints
    in the coordinate the sampler actually walks in."""

    design: np.ndarray
    offset: np.ndarray
    cset: ConstraintSet
    reparam: Optional[ReparamMap]
    names: tuple

    @property
    def dim(self) -> int:
        return self.design.shape[1]

    def to_original(self, draws: np.ndarray) -> np.ndarray:
        return self.reparam.to_beta(draws) if self.reparam is not None else draws


def _reduce(data: Dataset, cs: ConstraintSet) -> _WorkingModel:
    cs = validate(cs)
    if cs.p != data.p:
        raise DimensionMismatch(
            f"constraints are on {cs.p} coefficients but the design has {data.p} columns"
        )
    if cs.num_equality == 0:
        return _WorkingModel(data.X, data.offset, cs, None, data.names)
    rm = eliminate_equalities(cs, data.X)
    if rm.alpha == 0:
        raise DimensionMismatch(
            "equality constraints determine all coefficients; nothing to sample"
        )
    names = tuple(data.names[j] for j in rm.free_cols)
    return _WorkingModel(rm.U, data.offset + rm.delta, rm.reduced_constraints(), rm, names)


def _starting_point(work: _WorkingModel, target=None) -> np.ndarray:
    """Feasible initial state, warm-started near ``target`` when given.

    Projecting a data-informed point onto the polytope shortens the burn-in
    transient considerably when the coordinate chain mixes slowly (collinear
    designs under a diffuse prior).
    """
    if work.cset.m == 0:
        if target is None:
            return np.zeros(work.dim)
        return np.asarray(target, dtype=float).copy()
    try:
        return find_feasible_point(work.cset, start=target)
    except Infeasible:
        if target is None:
            raise
        return find_feasible_point(work.cset)


def _audit(draws: np.ndarray, cs: ConstraintSet, tol: float = AUDIT_TOL) -> int:
    """Count draws satisfying the user constraints; raise if any do not."""
    if cs.m == 0 or draws.size == 0:
        return draws.shape[0]
    Rn, bn = cs._normalized
    vals = draws @ Rn.T - bn
    k = cs.num_equality
    ok = np.all(np.abs(vals[:, :k]) <= tol) and np.all(vals[:, k:] >= -tol)
    if not ok:
        raise RuntimeError(
            "internal error: a retained draw violates the constraint set"
        )
    return draws.shape[0]


def _retained_indices(cfg: SamplerConfig):
    return range(cfg.burn_in, cfg.n_iter, cfg.thin)


def fit_lm(
    data: Dataset,
    cs: ConstraintSet,
    prior: Optional[PriorSpec] = None,
    cfg: Optional[SamplerConfig] = None,
    *,
    sigma2_fixed: Optional[float] = None,
) -> PosteriorSamples:
    """Constrained-coefficient gaussian linear model.

    Alternates a truncated-normal sweep for beta with a conjugate gamma
    update of the noise precision.  ``prior=None`` uses the vague default
    (zero mean, 100^2 I, a = b = 0.01) in the working dimension.
    ``sigma2_fixed`` pins the noise variance instead of sampling it (the
    degenerate-variance test hook; ``sigma2_draws`` is then None).
    """
    cfg = cfg or SamplerConfig()
    work = _reduce(data, cs)
    dim = work.dim
    prior = prior or PriorSpec.vague(dim)
    if prior.dim != dim:
        raise DimensionMismatch(
            f"prior has dimension {prior.dim}; the working space has {dim} "
            "(equality elimination reduces the dimension)"
        )
    if sigma2_fixed is not None and sigma2_fixed <= 0:
        raise DimensionMismatch("sigma2_fixed must be positive")

    y_work = data.y - work.offset
    design = work.design
    n = data.n
    XtX = design.T @ design
    Xty = design.T @ y_work
    sig1_inv = _spd_inverse(prior.sigma1, what="prior covariance")
    sig1_inv_mu = sig1_inv @ prior.mu1
    eye = np.eye(dim)

    start = _starting_point(work, np.linalg.lstsq(design, y_work, rcond=None)[0])
    resid0 = y_work - design @ start
    if sigma2_fixed is not None:
        sigma2_init = float(sigma2_fixed)
    else:
        scale = 1.0 + float(y_work @ y_work) / max(n, 1)
        sigma2_init = max(float(resid0 @ resid0) / max(n, 1), 1e-8 * scale)

    rows = work.cset.R
    lo_w = work.cset.b
    hi_w = np.full(rows.shape[0], np.inf)

    keep_beta = []
    keep_sigma2 = []
    for chain in range(cfg.n_chains):
        rng = cfg.chain_rng(chain)
        beta = start.copy()
        sigma2 = sigma2_init
        retained = set(_retained_indices(cfg))
        for it in range(cfg.n_iter):
            lam = XtX / sigma2 + sig1_inv
            chol = _chol_lower(lam, "full-conditional precision")
            mu_star = scipy.linalg.cho_solve(
                (chol, True), sig1_inv_mu + Xty / sigma2
            )
            # S = chol(lam)^-T satisfies S S' = lam^-1
            sqrt = scipy.linalg.solve_triangular(chol, eye, lower=True).T
            engine = CoordinateGibbs(mu_star, sqrt, rows)
            engine.set_bounds(lo_w, hi_w)
            engine.set_state(beta)
            for _ in range(cfg.inner_sweeps):
                engine.sweep(rng)
            beta = engine.state()
            if sigma2_fixed is None:
                resid = y_work - design @ beta
                rate = prior.b + 0.5 * float(resid @ resid)
                sigma2 = 1.0 / rng.gamma(prior.a + 0.5 * n, 1.0 / rate)
            if it in retained:
                keep_beta.append(beta.copy())
                keep_sigma2.append(sigma2)

    gamma_draws = np.array(keep_beta)
    beta_draws = work.to_original(gamma_draws)
    audit = _audit(beta_draws, cs)
    meta = _meta(cfg, data, model="lm", family="gaussian", audit=audit, prior=prior)
    sigma2_draws = None if sigma2_fixed is not None else np.array(keep_sigma2)
    return PosteriorSamples(draws=beta_draws, sigma2_draws=sigma2_draws, meta=meta)


def fit_glm(
    data: Dataset,
    fam: GlmFamily,
    cs: ConstraintSet,
    prior: Optional[PriorSpec] = None,
    cfg: Optional[SamplerConfig] = None,
) -> PosteriorSamples:
    """Constrained-coefficient canonical GLM via the product slice sampler.

    ``prior=None`` builds the empirical-Bayes default: mean at the
    unconstrained MLE of the working model, covariance the inverse Fisher
    information there (this requires the MLE to exist; supply a prior
    explicitly when it does not, e.g. p >= n or separated data).
    """
    cfg = cfg or SamplerConfig()
    fam.check_response(data.y)
    work = _reduce(data, cs)
    dim = work.dim
    design = work.design
    offset = work.offset
    n = data.n
    if prior is None:
        prior = PriorSpec.empirical_bayes(
            fam, Dataset(design, data.y, offset, names=work.names)
        )
    if prior.dim != dim:
        raise DimensionMismatch(
            f"prior has dimension {prior.dim}; the working space has {dim} "
            "(equality elimination reduces the dimension)"
        )

    # The beta-conditional has fixed covariance sigma1 and fixed location
    # mu1 + sigma1 X'y; only the slice bounds move between iterations.
    mu_star = prior.mu1 + prior.sigma1 @ (design.T @ data.y)
    sqrt = _chol_lower(prior.sigma1, "prior covariance")
    m_user = work.cset.m
    all_rows = np.vstack([work.cset.R, design]) if n else work.cset.R
    engine = CoordinateGibbs(mu_star, sqrt, all_rows)
    lower = np.empty(m_user + n)
    upper = np.empty(m_user + n)
    lower[:m_user] = work.cset.b
    upper[:m_user] = np.inf

    start = _starting_point(work, prior.mu1)
    keep = []
    for chain in range(cfg.n_chains):
        rng = cfg.chain_rng(chain)
        engine.set_state(start)
        retained = set(_retained_indices(cfg))
        for it in range(cfg.n_iter):
            # eta from the engine's own activity cache: slice levels sit
            # above psi(eta) by an Exp(1) draw, and that margin must survive
            # in the representation the sweeps compare bounds against
            eta = engine.row_activity()[m_user:] + offset
            levels = fam.psi(eta) + rng.standard_exponential(n)
            lo_i, hi_i = fam.slice_interval(levels)
            lower[m_user:] = lo_i - offset
            upper[m_user:] = hi_i - offset
            engine.set_bounds(lower, upper)
            for _ in range(cfg.inner_sweeps):
                engine.sweep(rng)
            if it in retained:
                keep.append(engine.state())

    gamma_draws = np.array(keep)
    beta_draws = work.to_original(gamma_draws)
    audit = _audit(beta_draws, cs)
    meta = _meta(cfg, data, model="glm", family=fam.name, audit=audit, prior=prior)
    return PosteriorSamples(draws=beta_draws, sigma2_draws=None, meta=meta)


def estimate_ergodicity_bound(
    data: Dataset,
    fam: GlmFamily,
    cs: ConstraintSet,
    prior: PriorSpec,
    n_mc: int = 2000,
    rng: Optional[np.random.Generator] = None,
    warmup: int = 500,
) -> ErgodicityEstimate:
    """Monte Carlo bound on the slice sampler's geometric rate.

    Draws from the data-tilted truncated normal
    ``TN(mu1 + sigma1 X'y, sigma1)`` on the constraint region and averages
    ``prod_i exp{-(psi(eta_i) - psi_inf)}``, whose mean ``h`` gives the
    bound ``r <= 1 - h``.  With no constraints the draws are independent
    and ``mc_se`` is exact; under constraints the draws come from a Gibbs
    chain (after ``warmup`` sweeps) and the naive standard error
    understates autocorrelation.  With n = 0 the product is empty and
    ``h_hat`` is exactly 1.
    """
    if n_mc < 1:
        raise DimensionMismatch("n_mc must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    work = _reduce(data, cs)
    dim = work.dim
    if prior.dim != dim:
        raise DimensionMismatch(
            f"prior has dimension {prior.dim}; the working space has {dim}"
        )
    design, offset = work.design, work.offset

    mu_q = prior.mu1 + prior.sigma1 @ (design.T @ data.y)
    sqrt = _chol_lower(prior.sigma1, "prior covariance")
    if work.cset.m == 0:
        z = rng.standard_normal((n_mc, dim))
        draws = z @ sqrt.T + mu_q
    else:
        engine = CoordinateGibbs(mu_q, sqrt, work.cset.R)
        engine.set_bounds(work.cset.b, np.full(work.cset.m, np.inf))
        engine.set_state(_starting_point(work))
        for _ in range(warmup):
            engine.sweep(rng)
        draws = np.empty((n_mc, dim))
        for i in range(n_mc):
            engine.sweep(rng)
            draws[i] = engine.state()

    eta = draws @ design.T + offset  # (n_mc, n)
    log_factors = -(fam.psi(eta) - fam.psi_inf)
    values = np.exp(log_factors.sum(axis=1))
    h_hat = float(values.mean())
    mc_se = float(values.std(ddof=1) / np.sqrt(n_mc)) if n_mc > 1 else 0.0
    return ErgodicityEstimate(h_hat=h_hat, mc_se=mc_se, r_upper=1.0 - h_hat)


def _meta(
    cfg: SamplerConfig,
    data: Dataset,
    model: str,
    family: str,
    audit: int,
    prior: PriorSpec,
) -> dict:
    return {
        "model": model,
        "family": family,
        "names": list(data.names),
        "n_iter": cfg.n_iter,
        "burn_in": cfg.burn_in,
        "thin": cfg.thin,
        "seed": cfg.seed,
        "n_chains": cfg.n_chains,
        "inner_sweeps": cfg.inner_sweeps,
        "audit_count": audit,
        "audit_tol": AUDIT_TOL,
        "prior": prior,  # the resolved prior object (working-space dimension)
    }


def with_seed(cfg: SamplerConfig, seed: int) -> SamplerConfig:
    """Copy of a config with a different seed (chains re-keyed)."""
    return replace(cfg, seed=seed)
