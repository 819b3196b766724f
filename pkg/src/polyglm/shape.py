"""Shape-restricted regression via Bernstein polynomial bases.

A function on [0, 1] expanded as ``f(x) = sum_k beta_k b_k(x, N)`` in the
Bernstein basis ``b_k(x, N) = C(N, k) x^k (1-x)^(N-k)`` is non-decreasing
whenever consecutive coefficients are non-decreasing, so monotonicity is a
set of first-difference inequality rows on beta - exactly the constraint
format the samplers consume.  The same idea on a tensor-product basis gives
surfaces monotone in both inputs.

Covariates are affinely rescaled to [0, 1] from their training range;
evaluation outside that range is refused rather than extrapolated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.stats import binom

from .analysis import dic
from .constraints import ConstraintSet
from .errors import DimensionMismatch, OutOfRange
from .glm_family import GAUSSIAN, Dataset
from .samplers import PriorSpec, SamplerConfig, fit_lm


def bernstein_design(x, degree: int) -> np.ndarray:
    """Basis matrix with entry (i, k) = ``b_k(x_i, degree)``.

    Requires every x in [0, 1]; rows sum to one (partition of unity).
    ``degree = 0`` gives the single constant column.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if degree < 0:
        raise DimensionMismatch("degree must be >= 0")
    if np.any(x < 0.0) or np.any(x > 1.0) or not np.all(np.isfinite(x)):
        raise OutOfRange("Bernstein design needs inputs inside [0, 1]")
    k = np.arange(degree + 1)
    return binom.pmf(k[None, :], degree, x[:, None])


def monotone_constraint_matrix(degree: int, increasing: bool = True) -> ConstraintSet:
    """First-difference rows making a degree-N Bernstein function monotone.

    Returns the (N, N+1) system ``beta_{k+1} - beta_k >= 0`` (or the
    negation for decreasing).
    """
    if degree < 1:
        raise DimensionMismatch("monotonicity needs degree >= 1")
    R = np.zeros((degree, degree + 1))
    idx = np.arange(degree)
    R[idx, idx] = -1.0
    R[idx, idx + 1] = 1.0
    if not increasing:
        R = -R
    return ConstraintSet(R, np.zeros(degree), 0)


def bimonotone_constraint_matrix(degree: int) -> ConstraintSet:
    """Difference rows making a tensor Bernstein surface monotone in both inputs.

    Coefficients are indexed row-major: ``(k1, k2) -> k1 * (N+1) + k2``.
    The first ``N (N+1)`` rows are differences along the first input (k2
    fixed), the next ``N (N+1)`` along the second.  The stacked matrix is
    rank deficient by construction; rows are not deduplicated.
    """
    if degree < 1:
        raise DimensionMismatch("monotonicity needs degree >= 1")
    size = (degree + 1) ** 2
    rows = []
    for k1 in range(degree):
        for k2 in range(degree + 1):
            r = np.zeros(size)
            r[(k1 + 1) * (degree + 1) + k2] = 1.0
            r[k1 * (degree + 1) + k2] = -1.0
            rows.append(r)
    for k1 in range(degree + 1):
        for k2 in range(degree):
            r = np.zeros(size)
            r[k1 * (degree + 1) + k2 + 1] = 1.0
            r[k1 * (degree + 1) + k2] = -1.0
            rows.append(r)
    R = np.array(rows)
    return ConstraintSet(R, np.zeros(R.shape[0]), 0)


@dataclass(frozen=True)
class BernsteinSpec:
    """Rescaling recipe for one covariate: training range and degree."""

    degree: int
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.degree >= 0 and np.isfinite(self.lo) and np.isfinite(self.hi)):
            raise DimensionMismatch("bad Bernstein spec")
        if self.hi <= self.lo:
            raise DimensionMismatch("degenerate covariate range")

    @classmethod
    def from_data(cls, x, degree: int) -> "BernsteinSpec":
        x = np.asarray(x, dtype=float)
        return cls(degree=degree, lo=float(x.min()), hi=float(x.max()))

    def rescale(self, x) -> np.ndarray:
        """Map raw covariate values into [0, 1]; refuses extrapolation."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < self.lo) or np.any(x > self.hi):
            raise OutOfRange(
                f"values outside the training range [{self.lo}, {self.hi}]"
            )
        return (x - self.lo) / (self.hi - self.lo)

    def design(self, x) -> np.ndarray:
        return bernstein_design(self.rescale(x), self.degree)


def _pad_columns(cs: ConstraintSet, before: int, after: int) -> np.ndarray:
    m = cs.R.shape[0]
    return np.hstack(
        [np.zeros((m, before)), cs.R, np.zeros((m, after))]
    )


@dataclass(frozen=True)
class ShapeModel:
    """A design plus constraint system for one shape-restricted fit.

    ``slices`` maps component names to column ranges of the design, so the
    fitted component functions can be evaluated from posterior draws.
    """

    design: np.ndarray
    cset: ConstraintSet
    names: tuple
    slices: dict
    specs: tuple
    builder: Callable = None

    def dataset(self, y) -> Dataset:
        return Dataset(self.design, y, names=self.names)

    def component_values(self, coef: np.ndarray, grid, component: str) -> np.ndarray:
        """Evaluate one fitted component on raw-scale grid points.

        ``coef`` may be a single coefficient vector or a matrix of draws.
        """
        return self.builder(np.asarray(coef, dtype=float), np.asarray(grid, dtype=float), component)


def univariate_monotone_model(x, degree: int, increasing: bool = True) -> ShapeModel:
    """Model ``alpha + f(x)`` with f monotone, f pinned to zero at the left
    edge of the training range (first basis column dropped) so the intercept
    stays identifiable."""
    spec = BernsteinSpec.from_data(x, degree)
    B = spec.design(x)[:, 1:]
    design = np.hstack([np.ones((B.shape[0], 1)), B])
    cmono = monotone_constraint_matrix(degree, increasing)
    R = _pad_columns(ConstraintSet(cmono.R[:, 1:], cmono.b, 0), 1, 0)
    cset = ConstraintSet(R, np.zeros(R.shape[0]), 0)
    names = ("intercept",) + tuple(f"f_b{k}" for k in range(1, degree + 1))
    slices = {"f": slice(1, degree + 1)}
    specs = (spec,)

    def builder(coef, grid, component):
        basis = specs[0].design(grid)[:, 1:]
        return coef[..., slices["f"]] @ basis.T

    return ShapeModel(design=design, cset=cset, names=names,
                      slices=slices, specs=specs, builder=builder)


def additive_monotone_model(
    x1, x2, degree1: int, degree2: int,
    increasing: tuple = (True, True),
) -> ShapeModel:
    """Additive model ``alpha + f1(x1) + f2(x2)`` with monotone components.

    Each component is a Bernstein expansion with its first basis column
    dropped (pinning ``f_j`` to zero at the left edge), which keeps the
    intercept identifiable; the monotonicity rows are the corresponding
    reduced first differences.
    """
    spec1 = BernsteinSpec.from_data(x1, degree1)
    spec2 = BernsteinSpec.from_data(x2, degree2)
    B1 = spec1.design(x1)[:, 1:]
    B2 = spec2.design(x2)[:, 1:]
    n = B1.shape[0]
    design = np.hstack([np.ones((n, 1)), B1, B2])

    c1 = monotone_constraint_matrix(degree1, increasing[0])
    c2 = monotone_constraint_matrix(degree2, increasing[1])
    R = np.vstack(
        [
            _pad_columns(ConstraintSet(c1.R[:, 1:], c1.b, 0), 1, degree2),
            _pad_columns(ConstraintSet(c2.R[:, 1:], c2.b, 0), 1 + degree1, 0),
        ]
    )
    cset = ConstraintSet(R, np.zeros(R.shape[0]), 0)

    names = (
        ("intercept",)
        + tuple(f"f1_b{k}" for k in range(1, degree1 + 1))
        + tuple(f"f2_b{k}" for k in range(1, degree2 + 1))
    )
    slices = {"f1": slice(1, 1 + degree1), "f2": slice(1 + degree1, 1 + degree1 + degree2)}
    specs = (spec1, spec2)

    def builder(coef, grid, component):
        spec = specs[0] if component == "f1" else specs[1]
        basis = spec.design(grid)[:, 1:]
        block = coef[..., slices[component]]
        return block @ basis.T

    return ShapeModel(design=design, cset=cset, names=names,
                      slices=slices, specs=specs, builder=builder)


def tensor_bimonotone_model(x1, x2, degree: int) -> ShapeModel:
    """Surface model ``alpha + f(x1, x2)`` monotone in both inputs.

    Uses the tensor Bernstein basis with its (0, 0) column dropped (so the
    intercept stays identifiable) and the corresponding reduced difference
    rows.
    """
    spec1 = BernsteinSpec.from_data(x1, degree)
    spec2 = BernsteinSpec.from_data(x2, degree)
    B1 = spec1.design(x1)
    B2 = spec2.design(x2)
    tensor = np.einsum("ij,ik->ijk", B1, B2).reshape(B1.shape[0], -1)
    design = np.hstack([np.ones((B1.shape[0], 1)), tensor[:, 1:]])

    cfull = bimonotone_constraint_matrix(degree)
    R = _pad_columns(ConstraintSet(cfull.R[:, 1:], cfull.b, 0), 1, 0)
    cset = ConstraintSet(R, np.zeros(R.shape[0]), 0)

    names = ("intercept",) + tuple(
        f"t_{k1}_{k2}"
        for k1 in range(degree + 1)
        for k2 in range(degree + 1)
        if not (k1 == 0 and k2 == 0)
    )
    slices = {"surface": slice(1, design.shape[1])}
    specs = (spec1, spec2)

    def builder(coef, grid, component):
        # grid is (g, 2) raw points; returns the surface without intercept
        g1 = specs[0].design(grid[:, 0])
        g2 = specs[1].design(grid[:, 1])
        basis = np.einsum("ij,ik->ijk", g1, g2).reshape(g1.shape[0], -1)[:, 1:]
        block = coef[..., slices["surface"]]
        return block @ basis.T

    return ShapeModel(design=design, cset=cset, names=names,
                      slices=slices, specs=specs, builder=builder)


def select_degree_by_dic(
    builder: Callable[[int], tuple],
    candidates: Iterable[int],
    prior: Optional[PriorSpec] = None,
    cfg: Optional[SamplerConfig] = None,
):
    """Fit each candidate degree with the gaussian sampler and rank by DIC.

    ``builder(N)`` must return ``(Dataset, ConstraintSet)`` for degree N.
    Returns ``(best_degree, table)`` where the table lists ``(N, dic)`` in
    input order; ties resolve to the smaller degree.  With ``prior=None``
    each candidate gets the vague default in its own dimension (an explicit
    prior must fit every candidate's dimension).
    """
    cfg = cfg or SamplerConfig()
    table = []
    for N in candidates:
        ds, cset = builder(int(N))
        samples = fit_lm(ds, cset, prior=prior, cfg=cfg)
        table.append((int(N), float(dic(samples, ds, GAUSSIAN))))
    if not table:
        raise DimensionMismatch("no candidate degrees supplied")
    best = min(table, key=lambda t: (t[1], t[0]))
    return best[0], table
