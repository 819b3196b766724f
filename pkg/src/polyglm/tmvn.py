"""Gibbs sampling from multivariate normals truncated to a polytope.

Target distribution:

    w ~ N_p(mu, sigma)   restricted to   c <= Rt w <= d   (componentwise),

with ``-inf``/``+inf`` entries in ``c``/``d`` marking one-sided or absent
bounds.  Sampling works in whitened coordinates ``w = mu + S z`` where
``S S' = sigma``; each constraint row then bounds a linear combination of
z, and the full conditional of every z_j given the rest is a univariate
standard normal truncated to an interval.  The interval is the intersection
of one interval per constraint row, and a row whose whitened coefficient
for z_j is zero imposes nothing on z_j.

The univariate sampler is exact rejection sampling with region-dependent
proposals; no approximation of the normal tail is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import constraints as _constraints
from .errors import (
    DimensionMismatch,
    EmptyConditionalInterval,
    EmptyInterval,
    Infeasible,
    NotPositiveDefinite,
)

# Decision thresholds of the univariate sampler: intervals whose nearest
# endpoint is beyond TAIL_BOUND use a translated-exponential proposal;
# two-sided intervals narrower than NARROW_WIDTH use a uniform proposal.
TAIL_BOUND = 0.45
NARROW_WIDTH = 1.0


def _one_sided(a: float, rng: np.random.Generator) -> float:
    """Draw from N(0,1) conditioned on x >= a."""
    if a <= TAIL_BOUND:
        while True:
            x = rng.standard_normal()
            if x >= a:
                return x
    # translated exponential proposal with the optimal rate (Robert 1995)
    lam = 0.5 * (a + math.sqrt(a * a + 4.0))
    while True:
        x = a + rng.exponential() / lam
        diff = x - lam
        if math.log(rng.random()) <= -0.5 * diff * diff:
            return x


def _two_sided(a: float, b: float, rng: np.random.Generator) -> float:
    """Draw from N(0,1) conditioned on a <= x <= b, both finite."""
    if b < 0.0:
        return -_two_sided(-b, -a, rng)
    wide = (b - a) >= NARROW_WIDTH
    if a <= 0.0:
        # interval straddles the mode
        if wide:
            while True:
                x = rng.standard_normal()
                if a <= x <= b:
                    return x
        while True:
            x = rng.uniform(a, b)
            if math.log(rng.random()) <= -0.5 * x * x:
                return x
    if wide:
        if a <= TAIL_BOUND:
            while True:
                x = rng.standard_normal()
                if a <= x <= b:
                    return x
        lam = 0.5 * (a + math.sqrt(a * a + 4.0))
        while True:
            x = a + rng.exponential() / lam
            if x > b:
                continue
            diff = x - lam
            if math.log(rng.random()) <= -0.5 * diff * diff:
                return x
    # narrow interval off the mode: uniform proposal, density peak at a
    half_aa = 0.5 * a * a
    while True:
        x = rng.uniform(a, b)
        if math.log(rng.random()) <= half_aa - 0.5 * x * x:
            return x


def sample_truncated_std_normal(
    lower: float, upper: float, rng: np.random.Generator
) -> float:
    """One exact draw from N(0,1) restricted to [lower, upper].

    Either endpoint may be infinite (use ``-math.inf`` / ``math.inf``; large
    finite stand-ins are not treated specially and will slow the sampler
    down).  Raises :class:`EmptyInterval` unless lower < upper.
    """
    if not lower < upper:
        raise EmptyInterval(f"empty truncation interval [{lower}, {upper}]")
    neg_inf = lower == -math.inf
    pos_inf = upper == math.inf
    if neg_inf and pos_inf:
        return rng.standard_normal()
    if pos_inf:
        return _one_sided(lower, rng)
    if neg_inf:
        return -_one_sided(-upper, rng)
    return _two_sided(lower, upper, rng)


@dataclass(frozen=True)
class TmvnSpec:
    """A truncated multivariate normal target.

    Fields: mean ``mu`` (p,), SPD covariance ``sigma`` (p, p), constraint
    rows ``Rt`` (m, p) and interval bounds ``c <= Rt w <= d`` with infinite
    entries allowed.  Construction certifies that the region is non-empty
    by running the feasible-point search on the stacked one-sided system.
    """

    mu: np.ndarray
    sigma: np.ndarray
    Rt: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.array(self.mu, dtype=float, copy=True))
        sigma = np.array(self.sigma, dtype=float, copy=True)
        p = mu.shape[0]
        if sigma.shape != (p, p):
            raise DimensionMismatch(f"sigma has shape {sigma.shape}, expected ({p}, {p})")
        Rt = np.array(self.Rt, dtype=float, copy=True).reshape(-1, p)
        m = Rt.shape[0]
        c = np.full(m, -np.inf) if self.c is None else np.atleast_1d(
            np.array(self.c, dtype=float, copy=True)
        )
        d = np.full(m, np.inf) if self.d is None else np.atleast_1d(
            np.array(self.d, dtype=float, copy=True)
        )
        if c.shape != (m,) or d.shape != (m,):
            raise DimensionMismatch("c and d must have one entry per row of Rt")
        if np.any(c > d):
            raise EmptyInterval("some lower bound exceeds its upper bound")
        if np.any(np.isposinf(c)) or np.any(np.isneginf(d)):
            raise EmptyInterval("bounds of the wrong sign of infinity")
        for arr in (mu, sigma, Rt):
            arr.setflags(write=False)
        c.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "Rt", Rt)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        self.cholesky  # fail fast on a bad covariance
        self.feasible_point

    @property
    def p(self) -> int:
        return self.mu.shape[0]

    @property
    def m(self) -> int:
        return self.Rt.shape[0]

    @cached_property
    def cholesky(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.sigma)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefinite("sigma has no Cholesky factor") from exc

    @cached_property
    def _one_sided_system(self) -> _constraints.ConstraintSet:
        """All finite bounds rewritten as rows of `row @ w >= bound`."""
        rows, rhs = [], []
        for k in range(self.m):
            if np.isfinite(self.c[k]):
                rows.append(self.Rt[k])
                rhs.append(self.c[k])
            if np.isfinite(self.d[k]):
                rows.append(-self.Rt[k])
                rhs.append(-self.d[k])
        if not rows:
            return _constraints.unconstrained(self.p)
        return _constraints.ConstraintSet(np.array(rows), np.array(rhs), 0)

    @cached_property
    def feasible_point(self) -> np.ndarray:
        return _constraints.find_feasible_point(self._one_sided_system)

    def contains(self, w, tol: float = _constraints.FEAS_TOL) -> bool:
        """Row-normalised membership check, infinite bounds ignored."""
        norms = np.linalg.norm(self.Rt, axis=1)
        safe = np.where(norms > 0.0, norms, 1.0)
        val = (self.Rt @ np.asarray(w, dtype=float)) / safe
        lo_ok = np.all(val - self.c / safe >= -tol)
        hi_ok = np.all(self.d / safe - val >= -tol)
        return bool(lo_ok and hi_ok)


class CoordinateGibbs:
    """Low-level single-site Gibbs engine in whitened coordinates.

    Parameters: location ``loc``, a square root ``sqrt`` of the covariance
    (``sqrt @ sqrt.T = sigma``, any square root works), and constraint
    ``rows`` bounding ``rows @ w``.  Bounds are set on the ``rows @ w``
    scale via :meth:`set_bounds` and may change between sweeps while the
    rows stay fixed; the whitened rows and their sign patterns are
    precomputed once.

    Coordinates are updated in a fixed ascending scan.  Row activity
    ``rows @ w`` is maintained incrementally inside a sweep and refreshed
    from scratch at the start of each sweep to stop drift.
    """

    def __init__(self, loc, sqrt, rows):
        self.loc = np.asarray(loc, dtype=float)
        self.sqrt = np.asarray(sqrt, dtype=float)
        self.p = self.loc.shape[0]
        rows = np.asarray(rows, dtype=float).reshape(-1, self.p)
        self.m = rows.shape[0]
        self._row_loc = rows @ self.loc
        self.t = rows @ self.sqrt
        # per-coordinate views of the rows entering its conditional interval
        self._cols = []
        for j in range(self.p):
            col = self.t[:, j]
            ipos = np.flatnonzero(col > 0.0)
            ineg = np.flatnonzero(col < 0.0)
            self._cols.append((ipos, col[ipos], ineg, col[ineg]))
        self._lo = np.full(self.m, -np.inf)
        self._hi = np.full(self.m, np.inf)
        self.z = np.zeros(self.p)

    def set_bounds(self, lower, upper):
        """Bounds for ``rows @ w``; infinite entries mark absent bounds."""
        self._lo = np.asarray(lower, dtype=float) - self._row_loc
        self._hi = np.asarray(upper, dtype=float) - self._row_loc

    def set_state(self, w):
        self.z = (
            np.linalg.solve(self.sqrt, np.asarray(w, dtype=float) - self.loc)
            if self.p
            else np.zeros(0)
        )

    def state(self) -> np.ndarray:
        return self.loc + self.sqrt @ self.z

    def row_activity(self) -> np.ndarray:
        """``rows @ state()``, computed exactly as :meth:`sweep` sees it.

        Bounds derived from these values cannot contradict the current
        state by more than the rounding of the bound itself, which matters
        when a bound is placed arbitrarily close to the state.
        """
        return self.t @ self.z + self._row_loc

    def sweep(self, rng: np.random.Generator):
        """One full pass over all coordinates (fixed ascending order)."""
        z = self.z
        lo, hi = self._lo, self._hi
        r = self.t @ z  # fresh row activity; incremental below
        for j, (ipos, tpos, ineg, tneg) in enumerate(self._cols):
            zj = z[j]
            lower = -np.inf
            upper = np.inf
            if ipos.size:
                base = r[ipos] - tpos * zj
                lower = np.max((lo[ipos] - base) / tpos)
                upper = np.min((hi[ipos] - base) / tpos)
            if ineg.size:
                base = r[ineg] - tneg * zj
                lower = max(lower, np.max((hi[ineg] - base) / tneg))
                upper = min(upper, np.min((lo[ineg] - base) / tneg))
            if lower >= upper:
                # roundoff can pinch the interval shut when two rows are
                # simultaneously active; keep the coordinate where it is
                gap = lower - upper
                if gap > 1e-8 * max(1.0, abs(lower), abs(upper)):
                    raise EmptyConditionalInterval(
                        f"conditional interval for coordinate {j} collapsed "
                        f"({lower} > {upper}); the chain state violates the constraints"
                    )
                znew = zj
            else:
                znew = sample_truncated_std_normal(lower, upper, rng)
            if znew != zj:
                z[j] = znew
                step = znew - zj
                if ipos.size:
                    r[ipos] += tpos * step
                if ineg.size:
                    r[ineg] += tneg * step


def gibbs_sample(
    spec: TmvnSpec,
    init=None,
    n_iter: int = 1000,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Run the truncated-normal Gibbs sampler and return all states.

    ``init`` must satisfy the constraints (row-normalised slack >= -1e-8);
    it defaults to the feasible point certified at construction.  Returns
    an ``(n_iter, p)`` array of consecutive states, one per full sweep; no
    burn-in is removed here.
    """
    if n_iter < 1:
        raise DimensionMismatch("n_iter must be >= 1")
    rng = np.random.default_rng() if rng is None else rng
    init = spec.feasible_point if init is None else np.asarray(init, dtype=float)
    if init.shape != (spec.p,):
        raise DimensionMismatch(f"init has shape {init.shape}, expected ({spec.p},)")
    if not spec.contains(init):
        raise Infeasible("init violates the truncation region")

    engine = CoordinateGibbs(spec.mu, spec.cholesky, spec.Rt)
    engine.set_bounds(spec.c, spec.d)
    engine.set_state(init)
    out = np.empty((n_iter, spec.p))
    for i in range(n_iter):
        engine.sweep(rng)
        out[i] = engine.state()
    return out
