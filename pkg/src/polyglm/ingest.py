"""CSV ingestion into model-ready datasets.

The generic loader reads a headed numeric CSV, extracts the response and an
optional offset (a column name or a ``log(col)`` / ``log(col / const)``
expression), expands declared categorical columns into indicators, and can
prepend an intercept column.

Two ready-made builders cover the worked case studies:

* a fertilizer response surface (``yield, N, P`` columns) fitted on the
  square-root scale with non-negativity constraints on the square-root
  terms, and
* unplanned reactor shutdown counts (``plant, year, scrams,
  critical_hours`` columns) fitted as poisson rates with an exposure
  offset and per-plant intercepts, either with ordered year effects or a
  concave-by-constraint quadratic year trend.
"""

from __future__ import annotations

import csv
import re
from pathlib import Path

import numpy as np

from .constraints import ConstraintSet
from .errors import MissingColumn, ParseError
from .glm_family import Dataset

_OFFSET_EXPR = re.compile(r"^log\(\s*(\w+)\s*(?:/\s*([0-9eE.+-]+)\s*)?\)$")


def _read_table(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise ParseError(f"{path}: duplicate column names")
    body = rows[1:]
    if not body:
        raise ParseError(f"{path}: no data rows")
    width = len(header)
    for i, row in enumerate(body):
        if len(row) != width:
            raise ParseError(f"{path}: row {i + 2} has {len(row)} cells, expected {width}")
    return header, body


def _numeric_column(header, body, name, path) -> np.ndarray:
    try:
        j = header.index(name)
    except ValueError:
        raise MissingColumn(f"{path}: no column named {name!r}") from None
    out = np.empty(len(body))
    for i, row in enumerate(body):
        try:
            out[i] = float(row[j])
        except ValueError:
            raise ParseError(
                f"{path}: row {i + 2}, column {name!r}: not a number ({row[j]!r})"
            ) from None
    return out


def parse_offset_spec(spec: str, columns: dict) -> np.ndarray:
    """Offset from a column name or ``log(col)`` / ``log(col/const)``."""
    expr = _OFFSET_EXPR.match(spec.strip())
    if expr:
        col, const = expr.group(1), expr.group(2)
        if col not in columns:
            raise MissingColumn(f"offset refers to unknown column {col!r}")
        vals = columns[col]
        if const is not None:
            try:
                vals = vals / float(const)
            except ValueError:
                raise ParseError(f"bad constant in offset expression: {const!r}") from None
        if np.any(vals <= 0):
            raise ParseError("offset log() argument must be positive")
        return np.log(vals)
    if spec not in columns:
        raise MissingColumn(f"offset refers to unknown column {spec!r}")
    return columns[spec]


def _expand_categorical(name: str, values: np.ndarray, keep_all: bool):
    levels = np.unique(values)
    if levels.shape[0] < 2:
        raise ParseError(f"categorical column {name!r} has fewer than two levels")
    start = 0 if keep_all else 1
    cols, names = [], []
    for lev in levels[start:]:
        cols.append((values == lev).astype(float))
        names.append(f"{name}_{lev:g}")
    return cols, names


def ingest_csv(
    path,
    response: str,
    offset: str | None = None,
    add_intercept: bool = False,
    categorical: dict | None = None,
) -> Dataset:
    """Load a headed numeric CSV into a :class:`Dataset`.

    Every column except the response (and a plain-column offset) becomes a
    design column, in file order.  ``categorical`` maps column names to
    ``"drop-first"`` (indicators for all but the first level) or ``"all"``
    (one indicator per level, for when no shared intercept is wanted).
    """
    header, body = _read_table(path)
    if response not in header:
        raise MissingColumn(f"{path}: no column named {response!r}")
    categorical = dict(categorical or {})
    for name, mode in categorical.items():
        if mode not in ("drop-first", "all"):
            raise ParseError(f"categorical mode for {name!r} must be 'drop-first' or 'all'")
        if name not in header:
            raise MissingColumn(f"{path}: no column named {name!r}")

    columns = {name: _numeric_column(header, body, name, path) for name in header}
    y = columns[response]

    offset_vec = None
    offset_col = None
    if offset is not None:
        offset_vec = parse_offset_spec(offset, columns)
        if offset in columns:
            offset_col = offset  # plain column used as offset: not a covariate

    design_cols, names = [], []
    if add_intercept:
        design_cols.append(np.ones(len(body)))
        names.append("intercept")
    for name in header:
        if name == response or name == offset_col:
            continue
        if name in categorical:
            cols, labels = _expand_categorical(name, columns[name], categorical[name] == "all")
            design_cols.extend(cols)
            names.extend(labels)
        else:
            design_cols.append(columns[name])
            names.append(name)
    if not design_cols:
        raise ParseError(f"{path}: no covariate columns left")
    X = np.column_stack(design_cols)
    return Dataset(X, y, offset=offset_vec, names=tuple(names))


# --- fertilizer response surface ---------------------------------------

def build_fertilizer_dataset(path) -> Dataset:
    """Corn-yield surface in the two fertilizer doses.

    Expects columns ``yield``, ``N``, ``P``; the design is
    ``[1, N, P, sqrt(N), sqrt(P), sqrt(N P)]``.
    """
    header, body = _read_table(path)
    y = _numeric_column(header, body, "yield", path)
    n_dose = _numeric_column(header, body, "N", path)
    p_dose = _numeric_column(header, body, "P", path)
    if np.any(n_dose < 0) or np.any(p_dose < 0):
        raise ParseError(f"{path}: doses must be non-negative")
    X = np.column_stack(
        [
            np.ones_like(y),
            n_dose,
            p_dose,
            np.sqrt(n_dose),
            np.sqrt(p_dose),
            np.sqrt(n_dose * p_dose),
        ]
    )
    names = ("intercept", "N", "P", "sqrt_N", "sqrt_P", "sqrt_NP")
    return Dataset(X, y, names=names)


def fertilizer_constraints() -> ConstraintSet:
    """Non-negative coefficients on the three square-root terms."""
    R = np.zeros((3, 6))
    R[0, 3] = R[1, 4] = R[2, 5] = 1.0
    return ConstraintSet(R, np.zeros(3), 0)


# --- reactor shutdown rates ---------------------------------------------

def _read_shutdown_table(path):
    header, body = _read_table(path)
    plant = _numeric_column(header, body, "plant", path)
    year = _numeric_column(header, body, "year", path)
    scrams = _numeric_column(header, body, "scrams", path)
    hours = _numeric_column(header, body, "critical_hours", path)
    # accept calendar years by shifting them onto 1..k
    year = year - year.min() + 1.0
    keep = scrams > 0
    if not keep.any():
        raise ParseError(f"{path}: all shutdown counts are zero")
    plant, year, scrams, hours = plant[keep], year[keep], scrams[keep], hours[keep]
    if np.any(hours <= 0):
        raise ParseError(f"{path}: critical hours must be positive on retained rows")
    return plant, year, scrams, hours


def _plant_indicators(plant: np.ndarray):
    levels = np.unique(plant)
    cols = [(plant == lev).astype(float) for lev in levels]
    names = [f"plant_{lev:g}" for lev in levels]
    return cols, names


def build_shutdown_yearly(path) -> tuple[Dataset, ConstraintSet]:
    """Per-plant intercepts plus ordered year effects.

    Year 1 is the reference level; the effects of years 2..k are
    constrained to decrease with the year (consecutive differences).
    The offset is ``log(critical_hours / 7000)``, i.e. exposure in units
    of 7000 critical hours.
    """
    plant, year, scrams, hours = _read_shutdown_table(path)
    years = np.unique(year)
    if years.shape[0] < 3:
        raise ParseError("need at least three distinct years for ordered effects")
    cols, names = _plant_indicators(plant)
    for lev in years[1:]:
        cols.append((year == lev).astype(float))
        names.append(f"year_{lev:g}")
    X = np.column_stack(cols)
    offset = np.log(hours / 7000.0)
    data = Dataset(X, scrams, offset=offset, names=tuple(names))

    n_plants = len(names) - (years.shape[0] - 1)
    n_years = years.shape[0] - 1
    R = np.zeros((n_years - 1, X.shape[1]))
    for i in range(n_years - 1):
        R[i, n_plants + i] = 1.0
        R[i, n_plants + i + 1] = -1.0
    return data, ConstraintSet(R, np.zeros(n_years - 1), 0)


def build_shutdown_quadratic(path) -> tuple[Dataset, ConstraintSet]:
    """Per-plant intercepts plus a quadratic year trend.

    The year enters centred, as ``(year - 5)`` and ``(year - 5)^2``; the
    trend is constrained to be convex (``beta2 >= 0``) and decreasing over
    the observed span (``beta1 + 10 beta2 <= 0``).
    """
    plant, year, scrams, hours = _read_shutdown_table(path)
    cols, names = _plant_indicators(plant)
    centred = year - 5.0
    cols.append(centred)
    names.append("year_lin")
    cols.append(centred ** 2)
    names.append("year_quad")
    X = np.column_stack(cols)
    offset = np.log(hours / 7000.0)
    data = Dataset(X, scrams, offset=offset, names=tuple(names))

    p = X.shape[1]
    R = np.zeros((2, p))
    R[0, p - 2] = -1.0
    R[0, p - 1] = -10.0
    R[1, p - 1] = 1.0
    return data, ConstraintSet(R, np.zeros(2), 0)
