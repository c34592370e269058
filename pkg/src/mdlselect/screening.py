"""Marginal screening: keep the m most promising covariates.

Two screens are provided. `sis` ranks standardized columns by the absolute
inner product with the response, which is n times the marginal correlation
up to the response's own scale. `nis` ranks covariates by how much a
marginal spline fit reduces the residual sum of squares, which catches
nonlinear marginal effects that a correlation misses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, ModelSubset
from .errors import InputError
from .splines import SplineBasisSpec, basis_eval


@dataclass(frozen=True)
class ScreenResult:
    """Survivors of a screen plus the full score vector (one per column)."""

    survivors: ModelSubset
    scores: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=float)
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)


def _top_m(scores: np.ndarray, m: int, kind: str) -> ModelSubset:
    # Stable sort on negated scores: ties resolve to the smaller index.
    order = np.argsort(-scores, kind="stable")
    return ModelSubset((order[:m] + 1).tolist(), kind=kind)


def _check_m(m: int, p: int) -> None:
    if not (1 <= m <= p):
        raise InputError(f"screen size m must satisfy 1 <= m <= p, got m={m}, p={p}")


def sis(d: Dataset, m: int) -> ScreenResult:
    """Sure independence screening on a standardized dataset.

    Scores are ``|X^T y|`` columnwise. Because standardized columns have
    mean zero, centering the response would not change any score, so the
    response is used as given.
    """
    if not d.standardized:
        raise InputError("sis requires a standardized dataset")
    _check_m(m, d.p)
    scores = np.abs(d.X.T @ d.y)
    return ScreenResult(_top_m(scores, m, "linear-predictor"), scores)


def nis(d: Dataset, m: int, spec: SplineBasisSpec = SplineBasisSpec()) -> ScreenResult:
    """Nonparametric screening by marginal spline-fit RSS reduction.

    For each covariate, a spline basis is built on its observed range, its
    centered basis is regressed on the centered response, and the score is
    the drop in RSS relative to the null fit (equivalently the squared norm
    of the fitted values). Covariates with a degenerate range score 0
    rather than raising: a constant column simply explains nothing.
    """
    _check_m(m, d.p)
    if d.n <= spec.basis_dim + 1:
        raise InputError(
            f"nis needs n > basis_dim + 1 (n={d.n}, basis_dim={spec.basis_dim}); "
            "too few degrees of freedom for the marginal fits"
        )
    y_c = d.y - d.y.mean()
    scores = np.zeros(d.p)
    for j in range(d.p):
        x = d.X[:, j]
        a, b = float(x.min()), float(x.max())
        if not (a < b):
            continue
        B = basis_eval(spec, a, b, x)
        Bc = B - B.mean(axis=0)
        coef, *_ = np.linalg.lstsq(Bc, y_c, rcond=None)
        fitted = Bc @ coef
        scores[j] = float(fitted @ fitted)
    return ScreenResult(_top_m(scores, m, "additive-group"), scores)
