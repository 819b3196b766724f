"""Canonical exponential-family models and their slice geometry.

A family is defined by its cumulant function ``psi`` through the density

    f(y | x, beta) = A(y, x) * exp{ y * eta - psi(eta) },   eta = x' beta,

covering gaussian (known unit variance), poisson (log link) and logistic
(logit link).  For the product slice sampler each observation contributes a
factor exp{-psi(eta_i)}; given a slice level ``s_i > inf psi``, the set
``{v : psi(v) <= s_i}`` is an interval, returned by :meth:`slice_interval`
in closed form per family.

Also provided: the log-likelihood and an unconstrained maximum-likelihood
routine (Newton-Raphson with step halving) used for empirical-Bayes priors
and as an unregularised comparator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expit

from .errors import (
    DimensionMismatch,
    EmptySlice,
    NoConvergence,
    Singular,
)

MLE_GRAD_TOL = 1e-8
MLE_MAX_ITER = 100


@dataclass(frozen=True)
class Dataset:
    """Observations for one model: design ``X`` (n, p), response ``y`` (n,),
    optional per-observation ``offset`` added to the linear predictor, and
    optional coefficient ``names`` used for reporting."""

    X: np.ndarray
    y: np.ndarray
    offset: np.ndarray | None = None
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.array(self.X, dtype=float, copy=True)
        if X.ndim != 2:
            raise DimensionMismatch(f"X must be 2-D, got ndim={X.ndim}")
        y = np.atleast_1d(np.array(self.y, dtype=float, copy=True))
        if y.shape != (X.shape[0],):
            raise DimensionMismatch(f"y has shape {y.shape}, expected ({X.shape[0]},)")
        if self.offset is None:
            offset = np.zeros(X.shape[0])
        else:
            offset = np.atleast_1d(np.array(self.offset, dtype=float, copy=True))
            if offset.shape != y.shape:
                raise DimensionMismatch("offset must match y in length")
        names = self.names
        if names is None:
            names = tuple(f"x{j}" for j in range(X.shape[1]))
        else:
            names = tuple(str(s) for s in names)
            if len(names) != X.shape[1]:
                raise DimensionMismatch("one name per design column required")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y)) and np.all(np.isfinite(offset))):
            raise DimensionMismatch("X, y and offset must be finite")
        for arr in (X, y, offset):
            arr.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def linear_predictor(self, beta) -> np.ndarray:
        return self.X @ np.asarray(beta, dtype=float) + self.offset


@dataclass(frozen=True)
class GlmFamily:
    """A canonical family: cumulant ``psi``, its derivatives, the infimum
    ``psi_inf = inf_v psi(v)``, and the slice-interval geometry."""

    name: str
    psi: Callable[[np.ndarray], np.ndarray]
    dpsi: Callable[[np.ndarray], np.ndarray]
    ddpsi: Callable[[np.ndarray], np.ndarray]
    psi_inf: float
    _interval: Callable = field(repr=False)
    _check_response: Callable = field(repr=False)

    def slice_interval(self, s):
        """Endpoints of ``{v : psi(v) <= s}``; accepts scalars or arrays.

        Raises :class:`EmptySlice` if any level is at or below ``psi_inf``
        (the slice is then empty or a single point).  Infinite levels give
        unbounded intervals.
        """
        s = np.asarray(s, dtype=float)
        if np.any(s <= self.psi_inf):
            raise EmptySlice(f"slice level at or below inf psi = {self.psi_inf}")
        lo, hi = self._interval(s)
        return lo, hi

    def check_response(self, y: np.ndarray):
        self._check_response(y)


def _poisson_interval(s):
    return np.full_like(s, -np.inf), np.log(s)


def _logistic_interval(s):
    # log(expm1(s)) computed stably; for s > 30 the correction to s is
    # below double precision, so the endpoint is s itself.
    hi = np.where(s > 30.0, s, np.log(np.expm1(np.minimum(s, 30.0))))
    return np.full_like(s, -np.inf), hi


def _gaussian_interval(s):
    r = np.sqrt(2.0 * s)
    return -r, r


def _check_poisson_response(y):
    if np.any(y < 0) or np.any(y != np.floor(y)):
        raise DimensionMismatch("poisson responses must be non-negative integers")


def _check_logistic_response(y):
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DimensionMismatch("logistic responses must be 0 or 1")


def _check_gaussian_response(y):
    pass


GAUSSIAN = GlmFamily(
    name="gaussian",
    psi=lambda v: 0.5 * np.square(v),
    dpsi=lambda v: np.asarray(v, dtype=float),
    ddpsi=lambda v: np.ones_like(np.asarray(v, dtype=float)),
    psi_inf=0.0,
    _interval=_gaussian_interval,
    _check_response=_check_gaussian_response,
)

POISSON = GlmFamily(
    name="poisson",
    psi=np.exp,
    dpsi=np.exp,
    ddpsi=np.exp,
    psi_inf=0.0,
    _interval=_poisson_interval,
    _check_response=_check_poisson_response,
)

LOGISTIC = GlmFamily(
    name="logistic",
    psi=lambda v: np.logaddexp(0.0, v),
    dpsi=expit,
    ddpsi=lambda v: expit(v) * (1.0 - expit(v)),
    psi_inf=0.0,
    _interval=_logistic_interval,
    _check_response=_check_logistic_response,
)

FAMILIES = {f.name: f for f in (GAUSSIAN, POISSON, LOGISTIC)}


def get_family(name: str) -> GlmFamily:
    try:
        return FAMILIES[name]
    except KeyError:
        raise KeyError(
            f"unknown family {name!r}; choose from {sorted(FAMILIES)}"
        ) from None


def log_likelihood(fam: GlmFamily, data: Dataset, beta) -> float:
    """Canonical log-likelihood up to the beta-free term:
    ``y' eta - sum_i psi(eta_i)``."""
    eta = data.linear_predictor(beta)
    return float(data.y @ eta - fam.psi(eta).sum())


def mle(fam: GlmFamily, data: Dataset, tol: float = MLE_GRAD_TOL,
        max_iter: int = MLE_MAX_ITER):
    """Unconstrained maximum likelihood by Newton-Raphson with step halving.

    Returns ``(beta_hat, fisher)`` where ``fisher = X' W X`` is the observed
    (= expected, canonical link) information at the optimum.  Convergence is
    declared when the gradient's max-norm drops to ``tol``.  Raises
    :class:`Singular` when the design has deficient column rank and
    :class:`NoConvergence` (carrying the last iterate) otherwise on failure.
    """
    fam.check_response(data.y)
    X, y = data.X, data.y
    n, p = X.shape
    if np.linalg.matrix_rank(X) < p:
        raise Singular("design does not have full column rank")

    beta = np.zeros(p)
    ll = log_likelihood(fam, data, beta)
    for _ in range(max_iter):
        eta = data.linear_predictor(beta)
        grad = X.T @ (y - fam.dpsi(eta))
        gnorm = float(np.max(np.abs(grad))) if p else 0.0
        if gnorm <= tol:
            weights = fam.ddpsi(eta)
            return beta, (X * weights[:, None]).T @ X
        weights = fam.ddpsi(eta)
        hess = (X * weights[:, None]).T @ X
        try:
            direction = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(
                "singular Hessian during Newton iteration",
                last_iterate=beta, grad_norm=gnorm,
            ) from exc
        step = 1.0
        for _ in range(60):
            cand = beta + step * direction
            ll_cand = log_likelihood(fam, data, cand)
            if np.isfinite(ll_cand) and ll_cand > ll - 1e-12:
                break
            step *= 0.5
        else:
            raise NoConvergence(
                "step halving failed to find an uphill step",
                last_iterate=beta, grad_norm=gnorm,
            )
        beta, ll = cand, ll_cand
    eta = data.linear_predictor(beta)
    gnorm = float(np.max(np.abs(X.T @ (y - fam.dpsi(eta)))))
    raise NoConvergence(
        f"no convergence in {max_iter} Newton iterations (|grad|_inf = {gnorm:.3g})",
        last_iterate=beta, grad_norm=gnorm,
    )
