"""Linear constraint systems on regression coefficients.

A constraint system describes the region

    {beta in R^p : R_eq beta = b_eq,  R_in beta >= b_in}

stored as a single ``(R, b)`` pair whose first ``num_equality`` rows are
equalities and the rest one-sided inequalities.  The module provides

* validation (shape checks, equality-block rank),
* a feasible-point search by alternating projections,
* elimination of equality rows into a lower-dimensional coordinate
  ``gamma`` with ``beta = A gamma + nu``, so downstream samplers only ever
  see inequality constraints.

Feasibility and slack checks are always performed on row-normalised
constraints (each row of ``R`` scaled to unit Euclidean norm, with ``b``
scaled accordingly) so tolerances mean the same thing at any user scale.
Stored matrices keep the user's scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    Infeasible,
    PivotFailure,
    RankDeficientEqualities,
)

FEAS_TOL = 1e-8
MAX_PIVOT_COND = 1e8


def _as_matrix(R) -> np.ndarray:
    R = np.atleast_2d(np.array(R, dtype=float, copy=True))
    if R.ndim != 2:
        raise DimensionMismatch(f"constraint matrix must be 2-D, got ndim={R.ndim}")
    return R


@dataclass(frozen=True)
class ConstraintSet:
    """Polytope ``R_eq beta = b_eq, R_in beta >= b_in`` on p coefficients.

    Parameters
    ----------
    R : (m, p) array
        Stacked constraint rows; the first ``num_equality`` rows are
        equalities, the remaining rows one-sided inequalities.
    b : (m,) array
        Right-hand sides, same ordering.
    num_equality : int
        Number of leading equality rows (0 <= num_equality <= m).

    ``m = 0`` is legal and means "unconstrained".
    """

    R: np.ndarray
    b: np.ndarray
    num_equality: int = 0

    def __post_init__(self):
        R = _as_matrix(self.R)
        b = np.atleast_1d(np.array(self.b, dtype=float, copy=True))
        if R.size == 0:
            # normalise the degenerate empty system to (0, p) x (0,)
            p = R.shape[1] if R.ndim == 2 and R.shape[1] else 0
            R = R.reshape(0, p)
            b = b.reshape(0)
        if b.ndim != 1 or b.shape[0] != R.shape[0]:
            raise DimensionMismatch(
                f"b has shape {b.shape}, expected ({R.shape[0]},)"
            )
        if not (0 <= self.num_equality <= R.shape[0]):
            raise DimensionMismatch(
                f"num_equality={self.num_equality} outside [0, {R.shape[0]}]"
            )
        if not np.all(np.isfinite(R)) or not np.all(np.isfinite(b)):
            raise DimensionMismatch("constraint entries must be finite")
        R.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "b", b)

    # --- basic shape accessors -------------------------------------------
    @property
    def m(self) -> int:
        return self.R.shape[0]

    @property
    def p(self) -> int:
        return self.R.shape[1]

    @property
    def num_inequality(self) -> int:
        return self.m - self.num_equality

    @property
    def R_eq(self) -> np.ndarray:
        return self.R[: self.num_equality]

    @property
    def b_eq(self) -> np.ndarray:
        return self.b[: self.num_equality]

    @property
    def R_in(self) -> np.ndarray:
        return self.R[self.num_equality :]

    @property
    def b_in(self) -> np.ndarray:
        return self.b[self.num_equality :]

    # --- normalised forms and slack --------------------------------------
    @cached_property
    def _normalized(self) -> tuple[np.ndarray, np.ndarray]:
        norms = np.linalg.norm(self.R, axis=1)
        safe = np.where(norms > 0.0, norms, 1.0)
        return self.R / safe[:, None], self.b / safe

    def equality_residual(self, beta) -> np.ndarray:
        """Row-normalised residuals ``R_eq beta - b_eq``."""
        Rn, bn = self._normalized
        k = self.num_equality
        return Rn[:k] @ np.asarray(beta, dtype=float) - bn[:k]

    def inequality_slack(self, beta) -> np.ndarray:
        """Row-normalised slacks ``R_in beta - b_in`` (>= 0 when satisfied)."""
        Rn, bn = self._normalized
        k = self.num_equality
        return Rn[k:] @ np.asarray(beta, dtype=float) - bn[k:]

    def satisfies(self, beta, tol: float = FEAS_TOL) -> bool:
        """True when beta lies in the region up to ``tol`` on normalised rows."""
        if self.m == 0:
            return True
        eq_ok = np.all(np.abs(self.equality_residual(beta)) <= tol)
        in_ok = self.num_inequality == 0 or np.all(self.inequality_slack(beta) >= -tol)
        return bool(eq_ok and in_ok)

    # --- serialisation -----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "R": self.R.tolist(),
            "b": self.b.tolist(),
            "num_equality": int(self.num_equality),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ConstraintSet":
        try:
            return cls(
                R=np.asarray(obj["R"], dtype=float),
                b=np.asarray(obj["b"], dtype=float),
                num_equality=int(obj.get("num_equality", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DimensionMismatch(f"bad constraint dictionary: {exc}") from exc


def unconstrained(p: int) -> ConstraintSet:
    """The empty constraint system on p coefficients."""
    return ConstraintSet(np.zeros((0, p)), np.zeros(0), 0)


def validate(cs: ConstraintSet) -> ConstraintSet:
    """Check a constraint system beyond basic shapes.

    The equality block must have full row rank; duplicated rows (consistent
    or contradictory) are rejected here.  Feasibility of the inequality
    system is *not* checked; that is the job of :func:`find_feasible_point`.

    Returns the same (immutable) instance for chaining.
    """
    k = cs.num_equality
    if k > 0:
        if k > cs.p:
            raise RankDeficientEqualities(
                f"{k} equality rows in only {cs.p} dimensions"
            )
        rank = np.linalg.matrix_rank(cs.R_eq)
        if rank < k:
            raise RankDeficientEqualities(
                f"equality block has rank {rank} < {k}; remove dependent rows"
            )
    return cs


def find_feasible_point(
    cs: ConstraintSet,
    max_iter: int = 1000,
    tol: float = FEAS_TOL,
    start=None,
) -> np.ndarray:
    """Find a point of the constraint region, interior where possible.

    Strategy: project ``start`` (default the origin) onto the equality
    affine subspace, then run cyclic projections onto violated inequality
    half-spaces inside that subspace; finally nudge away from any boundary
    that is still active so samplers can start strictly inside.  Raises
    :class:`Infeasible` when the projections fail to converge within
    ``max_iter`` sweeps.
    """
    cs = validate(cs)
    p = cs.p
    if start is None:
        start = np.zeros(p)
    else:
        start = np.asarray(start, dtype=float)
        if start.shape != (p,) or not np.all(np.isfinite(start)):
            raise DimensionMismatch(f"start must be a finite ({p},) vector")
    if cs.m == 0:
        return start.copy()

    Rn, bn = cs._normalized
    k = cs.num_equality
    R_eq, b_eq = Rn[:k], bn[:k]
    R_in, b_in = Rn[k:], bn[k:]

    if k > 0:
        pinv = np.linalg.pinv(R_eq)
        proj = np.eye(p) - pinv @ R_eq  # orthogonal projector onto null(R_eq)
        beta = pinv @ b_eq + proj @ start
    else:
        beta = start.copy()
        proj = np.eye(p)

    # directions of the inequality rows inside the equality subspace
    dirs = R_in @ proj  # row l is proj @ R_in[l]
    denom = np.einsum("ij,ij->i", R_in, dirs)  # squared norms of projected rows

    for _ in range(max_iter):
        slack = R_in @ beta - b_in
        worst = slack.min() if slack.size else 0.0
        if worst >= -tol:
            break
        for l in np.flatnonzero(slack < -tol):
            gap = b_in[l] - R_in[l] @ beta
            if gap <= tol:
                continue
            if denom[l] <= 1e-14:
                raise Infeasible(
                    f"inequality row {k + l} conflicts with the equality rows"
                )
            beta = beta + (gap / denom[l]) * dirs[l]
    else:
        raise Infeasible(
            f"no feasible point found after {max_iter} projection sweeps"
        )

    # polish: the samplers need starting slacks that are nonnegative up to
    # representation rounding, not merely within the feasibility tolerance,
    # because whitening can amplify a -1e-8 violation past their guards
    for _ in range(100):
        slack = R_in @ beta - b_in
        if slack.size == 0 or slack.min() >= 0.0:
            break
        for l in np.flatnonzero(slack < 0.0):
            gap = b_in[l] - R_in[l] @ beta
            if gap <= 0.0 or denom[l] <= 1e-14:
                continue
            beta = beta + (gap / denom[l]) * dirs[l]

    return _interior_nudge(beta, proj, R_in, b_in, tol)


def _interior_nudge(beta, proj, R_in, b_in, tol):
    """Push a feasible point off active inequality boundaries when possible."""
    if R_in.shape[0] == 0:
        return beta
    for _ in range(50):
        slack = R_in @ beta - b_in
        active = slack <= tol
        if not active.any():
            break
        d = proj @ R_in[active].sum(axis=0)
        nd = np.linalg.norm(d)
        if nd <= 1e-12:
            break  # boundary cannot be left (e.g. empty interior)
        d = d / nd
        current = slack.min()
        step = 1.0
        moved = False
        for _ in range(30):
            cand = beta + step * d
            cand_slack = R_in @ cand - b_in
            if cand_slack.min() > max(current, 0.0):
                beta = cand
                moved = True
                break
            step *= 0.5
        if not moved:
            break
    return beta


@dataclass(frozen=True)
class ReparamMap:
    """Affine reparametrisation that eliminates equality constraints.

    Encodes ``beta = A gamma + nu`` with ``gamma in R^alpha``,
    ``alpha = p - num_equality``, such that every beta in the image satisfies
    the equality rows exactly, and the original inequalities become
    ``D gamma >= w``.  ``U = X A`` and ``delta = X nu`` give the reduced
    design and a per-observation offset with ``X beta = U gamma + delta``.
    """

    A: np.ndarray
    nu: np.ndarray
    U: np.ndarray
    delta: np.ndarray
    D: np.ndarray
    w: np.ndarray
    alpha: int
    pivot_cols: np.ndarray
    free_cols: np.ndarray

    def to_beta(self, gamma) -> np.ndarray:
        """Map gamma (vector or rows-of-draws matrix) back to beta space."""
        gamma = np.asarray(gamma, dtype=float)
        if gamma.ndim == 1:
            return self.A @ gamma + self.nu
        return gamma @ self.A.T + self.nu

    def reduce_point(self, beta) -> np.ndarray:
        """Coordinates of a point in the equality subspace (its free entries)."""
        return np.asarray(beta, dtype=float)[self.free_cols]

    def reduced_constraints(self) -> ConstraintSet:
        return ConstraintSet(self.D, self.w, 0)


def eliminate_equalities(
    cs: ConstraintSet,
    X: np.ndarray,
    pivot_cols=None,
) -> ReparamMap:
    """Solve the equality rows for a pivot block of coefficients.

    Splits beta into pivot entries (expressed through the rest) and free
    entries gamma.  Pivot columns are chosen by QR with column pivoting on
    the equality block unless ``pivot_cols`` overrides the choice (used to
    test invariance of fits to the pivot).  Raises :class:`PivotFailure`
    when the pivot block is ill conditioned (condition number above 1e8).
    """
    cs = validate(cs)
    k = cs.num_equality
    if k == 0:
        raise DimensionMismatch("eliminate_equalities requires at least one equality row")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != cs.p:
        raise DimensionMismatch(
            f"design has shape {X.shape}, expected (n, {cs.p})"
        )
    R_eq, b_eq = cs.R_eq, cs.b_eq

    if pivot_cols is None:
        _, _, perm = scipy.linalg.qr(R_eq, pivoting=True)
        pivot = np.sort(perm[:k])
    else:
        pivot = np.asarray(pivot_cols, dtype=int)
        if pivot.shape != (k,) or len(np.unique(pivot)) != k:
            raise PivotFailure(f"pivot_cols must be {k} distinct column indices")
    free = np.setdiff1d(np.arange(cs.p), pivot)

    E1 = R_eq[:, pivot]
    if np.linalg.cond(E1) > MAX_PIVOT_COND:
        raise PivotFailure(
            "equality pivot block is ill conditioned; "
            "rescale the constraints or choose other pivot columns"
        )
    E2 = R_eq[:, free]
    T = np.linalg.solve(E1, E2)  # pivot entries = t - T gamma
    t = np.linalg.solve(E1, b_eq)

    alpha = cs.p - k
    A = np.zeros((cs.p, alpha))
    A[free, np.arange(alpha)] = 1.0
    A[pivot, :] = -T
    nu = np.zeros(cs.p)
    nu[pivot] = t

    D = cs.R_in[:, free] - cs.R_in[:, pivot] @ T
    w = cs.b_in - cs.R_in[:, pivot] @ t
    U = X[:, free] - X[:, pivot] @ T
    delta = X[:, pivot] @ t

    return ReparamMap(
        A=A, nu=nu, U=U, delta=delta, D=D, w=w,
        alpha=alpha, pivot_cols=pivot, free_cols=free,
    )
