"""Data containers: censoring transform, ordinal encoding, CSV ingestion.

Censoring at prespecified bounds [L, U] replaces y <= L by (L, left) and
y >= U by (U, right); both inequalities are weak, so observations exactly
at a bound count as censored.  The encoded form maps each observation to
the rank of its (possibly censored) value among the distinct values, which
is all the likelihood needs: the fitted transformation jumps exactly at
those distinct values.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .exceptions import DegenerateDataError, IngestionError, InvalidBoundsError


@dataclass(frozen=True)
class RawSample:
    """One observation: outcome value and covariate vector."""

    y: float
    z: Tuple[float, ...]


def _as_outcome_array(y) -> np.ndarray:
    if len(y) > 0 and isinstance(y[0], RawSample):
        arr = np.asarray([s.y for s in y], dtype=float)
    else:
        arr = np.asarray(y, dtype=float)
    if arr.ndim != 1:
        raise IngestionError("outcome must be a one-dimensional sequence")
    bad = np.where(~np.isfinite(arr))[0]
    if bad.size:
        raise IngestionError(f"outcome value at position {bad[0]} is not finite")
    return arr


def _as_covariate_matrix(z, n: int) -> np.ndarray:
    if z is None:
        return np.zeros((n, 0))
    arr = np.asarray(z, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape[0] != n:
        raise IngestionError(
            f"covariate rows ({arr.shape[0]}) do not match outcomes ({n})"
        )
    if not np.all(np.isfinite(arr)):
        i, j = np.argwhere(~np.isfinite(arr))[0]
        raise IngestionError(f"covariate value at row {i}, column {j} is not finite")
    return np.ascontiguousarray(arr)


def validate_bounds(bounds) -> Optional[Tuple[float, float]]:
    if bounds is None:
        return None
    try:
        lower, upper = (float(bounds[0]), float(bounds[1]))
    except (TypeError, ValueError, IndexError):
        raise InvalidBoundsError(f"bounds must be a (L, U) pair, got {bounds!r}") from None
    if not (np.isfinite(lower) and np.isfinite(upper)):
        raise InvalidBoundsError("bounds must both be finite")
    if not lower < upper:
        raise InvalidBoundsError(f"bounds must satisfy L < U, got L={lower!r}, U={upper!r}")
    return lower, upper


@dataclass
class CensoredDataset:
    """Outcomes after the censoring transform, with censoring flags.

    ``bounds`` is None for uncensored data, in which case both flag
    vectors are all False.
    """

    yprime: np.ndarray
    left: np.ndarray
    right: np.ndarray
    z: np.ndarray
    bounds: Optional[Tuple[float, float]] = None
    names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        self.yprime = np.asarray(self.yprime, dtype=float)
        self.left = np.asarray(self.left, dtype=bool)
        self.right = np.asarray(self.right, dtype=bool)
        self.z = _as_covariate_matrix(self.z, self.yprime.shape[0])
        if np.any(self.left & self.right):
            raise IngestionError("an observation cannot be censored on both sides")
        if self.bounds is not None:
            self.bounds = validate_bounds(self.bounds)

    @property
    def n(self) -> int:
        return self.yprime.shape[0]

    @property
    def p(self) -> int:
        return self.z.shape[1]

    @property
    def n_left(self) -> int:
        return int(np.count_nonzero(self.left))

    @property
    def n_right(self) -> int:
        return int(np.count_nonzero(self.right))


def censor_transform(y, z=None, bounds=None, names=None) -> CensoredDataset:
    """Apply censoring at bounds [L, U] (weak inequalities on both sides)."""
    yarr = _as_outcome_array(y)
    if len(y) > 0 and isinstance(y[0], RawSample):
        z = [s.z for s in y]
    zarr = _as_covariate_matrix(z, yarr.shape[0])
    pair = validate_bounds(bounds)
    if pair is None:
        left = np.zeros(yarr.shape, dtype=bool)
        right = np.zeros(yarr.shape, dtype=bool)
        return CensoredDataset(yarr, left, right, zarr, None, names)
    lower, upper = pair
    left = yarr <= lower
    right = yarr >= upper
    yprime = np.where(left, lower, np.where(right, upper, yarr))
    return CensoredDataset(yprime, left, right, zarr, pair, names)


def uncensored_dataset(y, z=None, names=None) -> CensoredDataset:
    return censor_transform(y, z, None, names)


@dataclass
class OrdinalEncoding:
    """Ordinal view of a dataset: distinct values and per-observation ranks.

    ``cuts`` holds the J strictly increasing distinct values of yprime and
    ``category`` the 1-based rank of each observation, so
    ``cuts[category - 1]`` recovers yprime.  When censoring applies, the
    left-censored category is 1 (cut L) and the right-censored one is J
    (cut U), exactly the first and last likelihood cells.
    """

    cuts: np.ndarray
    category: np.ndarray
    z: np.ndarray
    left: np.ndarray
    right: np.ndarray
    bounds: Optional[Tuple[float, float]] = None
    names: Optional[Tuple[str, ...]] = None
    counts: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.cuts = np.asarray(self.cuts, dtype=float)
        self.category = np.asarray(self.category, dtype=np.int64)
        if self.counts is None:
            self.counts = np.bincount(
                self.category - 1, minlength=self.cuts.shape[0]
            ).astype(np.int64)

    @property
    def n(self) -> int:
        return self.category.shape[0]

    @property
    def p(self) -> int:
        return self.z.shape[1]

    @property
    def n_categories(self) -> int:
        return self.cuts.shape[0]

    @property
    def n_alpha(self) -> int:
        return self.cuts.shape[0] - 1


def encode_ordinal(ds: CensoredDataset) -> OrdinalEncoding:
    """Rank observations among the distinct yprime values."""
    cuts, inverse = np.unique(ds.yprime, return_inverse=True)
    if cuts.shape[0] < 2:
        raise DegenerateDataError(
            "need at least two distinct outcome values to fit, got "
            f"{cuts.shape[0]}"
        )
    if ds.bounds is not None and not np.any(~ds.left & ~ds.right):
        raise DegenerateDataError(
            "no uncensored observation remains between the bounds"
        )
    category = inverse.astype(np.int64) + 1
    return OrdinalEncoding(
        cuts=cuts,
        category=category,
        z=ds.z,
        left=ds.left.copy(),
        right=ds.right.copy(),
        bounds=ds.bounds,
        names=ds.names,
    )


def read_csv(path, outcome=None, covariates=()):
    """Read outcome and covariate columns from a CSV file.

    Returns (y, z, names); y is None when no outcome column is requested.
    Line numbers in error messages count the header as line 1.
    """
    covariates = list(covariates)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise IngestionError(f"{path}: empty file")
        header = [h.strip() for h in reader.fieldnames]
        wanted = ([outcome] if outcome else []) + covariates
        missing = [c for c in wanted if c not in header]
        if missing:
            raise IngestionError(
                f"{path}: missing column(s) {', '.join(repr(c) for c in missing)}; "
                f"file has {', '.join(repr(c) for c in header)}"
            )
        y_vals = []
        z_rows = []
        for line_no, row in enumerate(reader, start=2):
            row = {(k.strip() if k else k): v for k, v in row.items()}
            if outcome:
                y_vals.append(_parse_cell(row.get(outcome), outcome, line_no, path))
            z_rows.append(
                [_parse_cell(row.get(c), c, line_no, path) for c in covariates]
            )
    n = len(z_rows)
    if n == 0:
        raise IngestionError(f"{path}: no data rows")
    y = np.asarray(y_vals, dtype=float) if outcome else None
    z = np.asarray(z_rows, dtype=float).reshape(n, len(covariates))
    return y, z, tuple(covariates)


def _parse_cell(text, column, line_no, path):
    if text is None or text.strip() == "":
        raise IngestionError(f"{path}: line {line_no}, column {column!r}: empty value")
    try:
        value = float(text)
    except ValueError:
        raise IngestionError(
            f"{path}: line {line_no}, column {column!r}: cannot parse {text!r}"
        ) from None
    if not np.isfinite(value):
        raise IngestionError(
            f"{path}: line {line_no}, column {column!r}: value is not finite"
        )
    return value
