"""Posterior summaries, DIC, and closed-form frequentist baselines."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .errors import DimensionMismatch, Singular, TooFewDraws
from .glm_family import Dataset, GlmFamily
from .samplers import PosteriorSamples

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class SummaryReport:
    """Per-coefficient posterior summary plus optional model-level numbers.

    Quantiles are interpolated order statistics (numpy's ``linear``
    method), so ``q025 <= median <= q975`` componentwise.
    """

    names: list
    mean: np.ndarray
    sd: np.ndarray
    median: np.ndarray
    q025: np.ndarray
    q975: np.ndarray
    dic: Optional[float] = None
    sel: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        coeffs = [
            {
                "name": self.names[j],
                "mean": float(self.mean[j]),
                "sd": float(self.sd[j]),
                "median": float(self.median[j]),
                "q025": float(self.q025[j]),
                "q975": float(self.q975[j]),
            }
            for j in range(len(self.names))
        ]
        return {"coefficients": coeffs, "dic": self.dic, "sel": self.sel}


def summarize(samples: PosteriorSamples, truth=None) -> SummaryReport:
    """Componentwise mean/sd/median/2.5%/97.5% of the retained draws.

    With ``truth`` given, also reports the squared-error loss of the
    posterior mean, ``sum_j (mean_j - truth_j)^2``.  Raises
    :class:`TooFewDraws` with fewer than two draws.
    """
    draws = samples.draws
    if draws.shape[0] < 2:
        raise TooFewDraws(f"need at least 2 draws, have {draws.shape[0]}")
    names = list(samples.meta.get("names", [f"x{j}" for j in range(draws.shape[1])]))
    q025, med, q975 = np.quantile(draws, [0.025, 0.5, 0.975], axis=0)
    mean = draws.mean(axis=0)
    sel = None
    if truth is not None:
        truth = np.asarray(truth, dtype=float)
        if truth.shape != (draws.shape[1],):
            raise DimensionMismatch("truth must have one entry per coefficient")
        sel = float(np.sum((mean - truth) ** 2))
    return SummaryReport(
        names=names,
        mean=mean,
        sd=draws.std(axis=0, ddof=1),
        median=med,
        q025=q025,
        q975=q975,
        sel=sel,
        meta=dict(samples.meta),
    )


def _deviance(fam: GlmFamily, data: Dataset, eta: np.ndarray) -> np.ndarray:
    """-2 log likelihood with the family's constant terms included.

    ``eta`` is (n,) or (k, n); returns a scalar-shaped array per row.
    """
    y = data.y
    if fam.name == "poisson":
        const = 2.0 * float(gammaln(y + 1.0).sum())
        return -2.0 * (eta @ y - np.exp(eta).sum(axis=-1)) + const
    if fam.name == "logistic":
        return -2.0 * (eta @ y - np.logaddexp(0.0, eta).sum(axis=-1))
    if fam.name == "gaussian":
        # unit-variance gaussian; sampled-variance models handled separately
        resid_sq = ((y - eta) ** 2).sum(axis=-1)
        return resid_sq + data.n * LOG_2PI
    raise KeyError(f"no deviance rule for family {fam.name!r}")


def dic(samples: PosteriorSamples, data: Dataset, fam: GlmFamily) -> float:
    """Deviance information criterion, ``DIC = D(theta_bar) + 2 p_D``.

    The deviance includes the family's normalising constants, so values
    are comparable across the families here.  For gaussian fits that
    sampled the noise variance, theta is ``(beta, sigma2)`` and the plug-in
    uses the posterior means of both.  A negative effective-parameter
    estimate ``p_D`` is legal output but logged as a warning (it usually
    signals a badly mixing or mis-specified model).
    """
    draws = samples.draws
    if draws.shape[0] < 2:
        raise TooFewDraws("DIC needs at least 2 retained draws")
    if draws.shape[1] != data.p:
        raise DimensionMismatch("draws and design disagree on dimension")
    beta_bar = draws.mean(axis=0)
    eta_draws = draws @ data.X.T + data.offset
    eta_bar = data.X @ beta_bar + data.offset

    if fam.name == "gaussian" and samples.sigma2_draws is not None:
        sigma2 = samples.sigma2_draws
        if sigma2.shape[0] != draws.shape[0]:
            raise DimensionMismatch("sigma2_draws must align with draws")
        resid_sq = ((data.y - eta_draws) ** 2).sum(axis=1)
        dev = data.n * (LOG_2PI + np.log(sigma2)) + resid_sq / sigma2
        s2_bar = float(sigma2.mean())
        resid_bar = float(((data.y - eta_bar) ** 2).sum())
        dev_at_mean = data.n * (LOG_2PI + np.log(s2_bar)) + resid_bar / s2_bar
    else:
        dev = _deviance(fam, data, eta_draws)
        dev_at_mean = float(_deviance(fam, data, eta_bar))

    p_d = float(dev.mean()) - dev_at_mean
    if p_d < 0:
        warnings.warn(
            f"negative effective number of parameters (p_D = {p_d:.3g})",
            RuntimeWarning,
            stacklevel=2,
        )
    return dev_at_mean + 2.0 * p_d


def ols(data: Dataset):
    """Least squares with standard errors.

    Returns ``(beta_hat, se)``.  The offset is subtracted from the response
    before fitting.  Raises :class:`Singular` unless the design has full
    column rank and at least one residual degree of freedom.
    """
    X, y = data.X, data.y - data.offset
    n, p = X.shape
    if n <= p or np.linalg.matrix_rank(X) < p:
        raise Singular("OLS needs full column rank and n > p")
    xtx = X.T @ X
    beta = np.linalg.solve(xtx, X.T @ y)
    resid = y - X @ beta
    sigma2_hat = float(resid @ resid) / (n - p)
    se = np.sqrt(sigma2_hat * np.diag(np.linalg.inv(xtx)))
    return beta, se


def ridge(data: Dataset, lam: float) -> np.ndarray:
    """Ridge point estimate ``(X'X + lam I)^-1 X'y`` (no intercept special-casing)."""
    if lam < 0:
        raise DimensionMismatch("ridge penalty must be >= 0")
    X, y = data.X, data.y - data.offset
    p = X.shape[1]
    if lam == 0 and np.linalg.matrix_rank(X) < p:
        raise Singular("lam = 0 requires a full-column-rank design")
    return np.linalg.solve(X.T @ X + lam * np.eye(p), X.T @ y)


def ridge_cv(
    data: Dataset,
    lambdas=None,
    k: int = 5,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Pick a ridge penalty by k-fold cross-validation.

    The default grid is 50 log-spaced values in [1e-4, 1e4].  Folds are a
    random partition from ``rng`` (seed it for reproducibility); ties in
    validation error resolve to the smaller penalty.
    """
    if lambdas is None:
        lambdas = np.logspace(-4, 4, 50)
    lambdas = np.sort(np.asarray(lambdas, dtype=float))
    rng = np.random.default_rng() if rng is None else rng
    n = data.n
    if n < k:
        raise DimensionMismatch(f"need at least k={k} observations")
    perm = rng.permutation(n)
    folds = np.array_split(perm, k)
    X, y = data.X, data.y - data.offset
    p = X.shape[1]
    errors = np.zeros(lambdas.shape[0])
    for hold in folds:
        mask = np.ones(n, dtype=bool)
        mask[hold] = False
        Xtr, ytr = X[mask], y[mask]
        Xva, yva = X[hold], y[hold]
        xtx = Xtr.T @ Xtr
        xty = Xtr.T @ ytr
        for i, lam in enumerate(lambdas):
            beta = np.linalg.solve(xtx + lam * np.eye(p), xty)
            errors[i] += float(((yva - Xva @ beta) ** 2).sum())
    return float(lambdas[int(np.argmin(errors))])
