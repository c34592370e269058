"""Data model: response/predictor containers, CSV ingestion, standardization.

Conventions used throughout the package:

* variances are population variances (the 1/n convention), so a
  standardized column has mean 0 and ``mean(z**2) == 1`` exactly;
* predictor and group indices exposed to callers are 1-based, matching the
  usual statistical notation S subset of {1, ..., p};
* datasets are immutable, so they can be shared freely across worker
  processes and repeated fits.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError

_MEAN_TOL = 1e-10
_VAR_TOL = 1e-8


def _frozen_array(values, dtype=float) -> np.ndarray:
    out = np.array(values, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ModelSubset:
    """A candidate model: strictly increasing 1-based indices.

    ``kind`` records what the indices point at: ``"linear-predictor"`` for
    columns of a design matrix, ``"additive-group"`` for additive model
    components. The empty subset is valid and denotes the null model.
    """

    indices: tuple[int, ...]
    kind: str = "linear-predictor"

    def __init__(self, indices=(), kind: str = "linear-predictor"):
        idx = tuple(int(i) for i in indices)
        if any(i < 1 for i in idx):
            raise InputError("model subset indices must be >= 1 (1-based)")
        if len(set(idx)) != len(idx):
            raise InputError("model subset indices must not repeat")
        object.__setattr__(self, "indices", tuple(sorted(idx)))
        if kind not in ("linear-predictor", "additive-group"):
            raise InputError(f"unknown subset kind {kind!r}")
        object.__setattr__(self, "kind", kind)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def positions(self) -> list[int]:
        """0-based column positions for array indexing."""
        return [i - 1 for i in self.indices]

    def validate_against(self, p: int) -> "ModelSubset":
        if self.indices and self.indices[-1] > p:
            raise InputError(
                f"subset index {self.indices[-1]} exceeds the number of "
                f"available columns ({p})"
            )
        return self


@dataclass(frozen=True)
class Dataset:
    """Immutable response vector and predictor matrix.

    ``col_means`` and ``col_scales`` record the affine map applied by
    :func:`standardize`; for freshly constructed data they are the identity
    (zeros and ones) and ``standardized`` is False. ``names`` holds one
    label per predictor column, defaulting to x1..xp.
    """

    y: np.ndarray
    X: np.ndarray
    col_means: np.ndarray = None
    col_scales: np.ndarray = None
    standardized: bool = False
    names: tuple[str, ...] = None

    def __post_init__(self):
        y = _frozen_array(self.y)
        X = _frozen_array(self.X)
        if y.ndim != 1:
            raise InputError("y must be one-dimensional")
        if X.ndim != 2:
            raise InputError("X must be two-dimensional")
        n, p = X.shape
        if n != y.shape[0]:
            raise InputError(
                f"X has {n} rows but y has {y.shape[0]} entries"
            )
        if n < 2:
            raise InputError(f"need at least 2 observations, got {n}")
        if p < 1:
            raise InputError("need at least one predictor column")
        if not np.all(np.isfinite(y)):
            raise InputError("y contains non-finite entries")
        if not np.all(np.isfinite(X)):
            raise InputError("X contains non-finite entries")

        means = self.col_means
        scales = self.col_scales
        means = _frozen_array(np.zeros(p) if means is None else means)
        scales = _frozen_array(np.ones(p) if scales is None else scales)
        if means.shape != (p,) or scales.shape != (p,):
            raise InputError("standardization metadata has wrong length")
        if not np.all(scales > 0):
            raise InputError("column scales must be strictly positive")

        names = self.names
        if names is None:
            names = tuple(f"x{j}" for j in range(1, p + 1))
        names = tuple(str(s) for s in names)
        if len(names) != p:
            raise InputError(f"expected {p} column names, got {len(names)}")

        if self.standardized:
            err_mean = np.max(np.abs(X.mean(axis=0)))
            err_var = np.max(np.abs(X.var(axis=0) - 1.0))
            if err_mean > _MEAN_TOL or err_var > _VAR_TOL:
                raise InputError(
                    "standardized flag set but columns are not standardized "
                    f"(max |mean| = {err_mean:.3g}, max |var-1| = {err_var:.3g})"
                )

        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "col_means", means)
        object.__setattr__(self, "col_scales", scales)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def with_y(self, y) -> "Dataset":
        """Same predictors and metadata, different response."""
        return Dataset(
            y=y,
            X=self.X,
            col_means=self.col_means,
            col_scales=self.col_scales,
            standardized=self.standardized,
            names=self.names,
        )

    def select_columns(self, subset: ModelSubset) -> "Dataset":
        """Restrict to the columns of ``subset`` (original order kept)."""
        subset.validate_against(self.p)
        pos = subset.positions()
        if not pos:
            raise InputError("cannot restrict a dataset to zero columns")
        return Dataset(
            y=self.y,
            X=self.X[:, pos],
            col_means=self.col_means[pos],
            col_scales=self.col_scales[pos],
            standardized=self.standardized,
            names=tuple(self.names[i] for i in pos),
        )


def load_csv(path, response_column: str) -> Dataset:
    """Read a regression dataset from a headered, comma-separated file.

    The named response column becomes ``y``; every other column must be
    numeric and becomes a predictor, in file order. Missing or non-numeric
    cells are rejected with the offending row and column named. Row numbers
    in diagnostics are 1-based data rows (the header is row 0).
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"input file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if response_column not in header:
            raise InputError(
                f"{path}: response column {response_column!r} not found "
                f"(columns: {', '.join(header)})"
            )
        y_pos = header.index(response_column)
        pred_names = [h for i, h in enumerate(header) if i != y_pos]
        if not pred_names:
            raise InputError(f"{path}: no predictor columns besides the response")

        y_vals = []
        rows = []
        for r, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise InputError(
                    f"{path}: row {r} has {len(row)} fields, expected {len(header)}"
                )
            parsed = []
            for c, cell in enumerate(row):
                text = cell.strip()
                try:
                    value = float(text)
                except ValueError:
                    value = np.nan
                if text == "" or not np.isfinite(value):
                    raise InputError(
                        f"{path}: row {r}, column {header[c]!r}: "
                        f"missing or non-numeric value {cell!r}"
                    )
                parsed.append(value)
            y_vals.append(parsed[y_pos])
            rows.append([v for i, v in enumerate(parsed) if i != y_pos])

    if len(rows) < 2:
        raise InputError(f"{path}: need at least 2 data rows, got {len(rows)}")
    return Dataset(y=np.asarray(y_vals), X=np.asarray(rows), names=tuple(pred_names))


def standardize(d: Dataset) -> Dataset:
    """Center each column and scale it to unit population variance.

    The response is left untouched. The returned dataset's metadata
    composes with whatever transform ``d`` already carried, so applying
    ``standardize`` twice is a fixed point (up to roundoff).
    """
    means = d.X.mean(axis=0)
    var = d.X.var(axis=0)
    bad = np.flatnonzero(var == 0.0)
    if bad.size:
        name = d.names[bad[0]]
        raise InputError(
            f"column {name!r} (index {bad[0] + 1}) has zero variance and "
            "cannot be standardized"
        )
    scales = np.sqrt(var)
    Z = (d.X - means) / scales
    return Dataset(
        y=d.y,
        X=Z,
        col_means=d.col_means + means * d.col_scales,
        col_scales=d.col_scales * scales,
        standardized=True,
        names=d.names,
    )


def unstandardize_coefficients(d: Dataset, subset: ModelSubset, beta_std):
    """Map coefficients fitted on standardized columns back to raw units.

    Parameters
    ----------
    d : Dataset
        Must carry standardization metadata (``standardized`` is True).
    subset : ModelSubset
        The columns (1-based, in ``d``'s indexing) that ``beta_std``
        corresponds to.
    beta_std : array
        Coefficients on the standardized scale, aligned with ``subset``.

    Returns
    -------
    (beta_orig, intercept_shift)
        ``beta_orig[j] = beta_std[j] / col_scale_j`` and
        ``intercept_shift = -sum(beta_orig * col_means)``. Predictions on
        the original scale are ``X_S @ beta_orig + intercept_shift`` plus
        whatever intercept the standardized-scale fit carried.
    """
    if not d.standardized:
        raise InputError(
            "unstandardize_coefficients requires a dataset that carries "
            "standardization metadata"
        )
    subset.validate_against(d.p)
    beta_std = np.asarray(beta_std, dtype=float)
    if beta_std.shape != (len(subset),):
        raise InputError(
            f"expected {len(subset)} coefficients for the subset, "
            f"got {beta_std.shape}"
        )
    pos = subset.positions()
    beta_orig = beta_std / d.col_scales[pos]
    shift = -float(beta_orig @ d.col_means[pos])
    return beta_orig, shift
