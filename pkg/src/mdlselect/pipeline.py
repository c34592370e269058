"""Three-stage model selection: screen, order, refit-and-score.

Stage 1 reduces p candidate covariates to m survivors by a marginal screen.
Stage 2 orders the survivors into one nested candidate sequence along a
regularization path. Stage 3 refits every nested candidate (including the
empty model) by maximum likelihood and scores it with a two-part code
length; the candidate with the shortest total code wins, ties going to the
smaller model.

Scored candidates are additionally capped at floor(n/2) estimated
coefficients. Beyond that point the plug-in scale estimate RSS/n (or SAE/n)
loses meaning and a near-interpolating candidate could win on its floored
fidelity term alone; the cap keeps every scored refit comfortably
overdetermined. Skipped candidates are recorded in the report's warnings,
never dropped silently.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .criteria import (
    MdlValue,
    mdl_additive,
    mdl_additive_robust,
    mdl_linear,
    mdl_robust,
)
from .dataset import Dataset, ModelSubset, standardize, unstandardize_coefficients
from .errors import InputError, NumericalError, SingularDesignError
from .paths import group_lasso_order, lasso_order, robust_order
from .refit import lad, lad_matrix, ols, ols_matrix
from .screening import nis, sis
from .splines import AdditiveDesign, SplineBasisSpec, build_additive_design

#: Largest number of subsets the exhaustive oracle will enumerate.
ORACLE_BUDGET = 1_000_000

METHOD_LINEAR = "mdl-linear"
METHOD_ROBUST = "mdl-robust"
METHOD_ADDITIVE = "mdl-additive"
METHOD_ADDITIVE_ROBUST = "mdl-additive-robust"

ALL_METHODS = (
    METHOD_LINEAR,
    METHOD_ROBUST,
    METHOD_ADDITIVE,
    METHOD_ADDITIVE_ROBUST,
)


@dataclass(frozen=True)
class FitReport:
    """Everything a selection run decided, plus how it got there.

    ``criterion_curve`` holds one ``(size, total)`` pair per scored
    candidate, the empty model first, so its length is ``path_length + 1``.
    ``coefficients`` and ``intercept`` are on the original data scale. For
    additive fits, ``group_values`` maps each selected covariate index to
    its fitted component values at the observed points (centered, so the
    intercept carries the overall level), and ``coefficients`` concatenates
    the spline coefficients of the selected groups in ascending covariate
    order.
    """

    method: str
    selected: ModelSubset
    coefficients: np.ndarray
    intercept: float
    criterion: float
    criterion_curve: tuple[tuple[int, float], ...]
    screen_size: int
    path_length: int
    timings_ms: dict
    warnings: tuple[str, ...] = ()
    group_values: dict | None = None
    basis_dim: int | None = None
    n_candidates: int | None = None

    def fitted_signal(self, d: Dataset) -> np.ndarray:
        """Fitted values (intercept included) at the observations of ``d``."""
        if self.group_values is not None:
            total = np.full(d.n, self.intercept)
            for values in self.group_values.values():
                total = total + values
            return total
        pos = self.selected.positions()
        return self.intercept + d.X[:, pos] @ self.coefficients

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "selected": list(self.selected.indices),
            "intercept": float(self.intercept),
            "coefficients": [float(v) for v in self.coefficients],
            "criterion": float(self.criterion),
            "criterion_curve": [[int(s), float(v)] for s, v in self.criterion_curve],
            "screen_size": int(self.screen_size),
            "path_length": int(self.path_length),
            "warnings": list(self.warnings),
            "timings_ms": {k: float(v) for k, v in self.timings_ms.items()},
        }
        if self.basis_dim is not None:
            out["basis_dim"] = int(self.basis_dim)
        if self.group_values is not None:
            out["group_values"] = {
                str(j): [float(v) for v in vals]
                for j, vals in sorted(self.group_values.items())
            }
        if self.n_candidates is not None:
            out["n_candidates"] = int(self.n_candidates)
        return out


def _argmin_curve(curve):
    """Index of the smallest total; earlier (smaller) candidates win ties."""
    best = 0
    for i in range(1, len(curve)):
        if curve[i][1] < curve[best][1]:
            best = i
    return best


def _fit_linear_family(d: Dataset, m: int | None, robust: bool) -> FitReport:
    timings = {}
    t0 = time.perf_counter()
    ds = standardize(d)
    timings["standardize_ms"] = (time.perf_counter() - t0) * 1e3

    n, p = ds.n, ds.p
    m_eff = min(n - 1, p) if m is None else m
    t0 = time.perf_counter()
    screen = sis(ds, m_eff)
    timings["screen_ms"] = (time.perf_counter() - t0) * 1e3

    sub = ds.select_columns(screen.survivors)
    coef_cap = max(1, n // 2)
    t0 = time.perf_counter()
    order_fn = robust_order if robust else lasso_order
    path = order_fn(sub, max_steps=coef_cap)
    timings["path_ms"] = (time.perf_counter() - t0) * 1e3

    survivors = screen.survivors.indices
    global_order = [survivors[i - 1] for i in path.activation_order]

    y_mean = float(d.y.mean())
    work = ds.with_y(d.y - y_mean)
    refit_fn = lad if robust else ols
    crit_fn = mdl_robust if robust else mdl_linear

    t0 = time.perf_counter()
    warnings: list[str] = []
    curve: list[tuple[int, float]] = []
    fits: list[tuple[ModelSubset, object]] = []
    for k in range(0, len(global_order) + 1):
        subset = ModelSubset(global_order[:k])
        try:
            res = refit_fn(work, subset)
        except SingularDesignError as exc:
            warnings.append(f"candidate of size {k} skipped: {exc}")
            continue
        loss = res.sae if robust else res.rss
        value = crit_fn(loss, k, n, p)
        curve.append((k, value.total))
        fits.append((subset, res))
    timings["refit_ms"] = (time.perf_counter() - t0) * 1e3

    if not curve:
        raise NumericalError("no candidate model could be refit")
    if len(curve) == 1 and len(global_order) > 0 and len(fits) == 1:
        # Only the empty model survived; every nonempty candidate failed.
        if all(s == 0 for s, _ in curve):
            raise NumericalError(
                "every nonempty candidate model was rank deficient: "
                + "; ".join(warnings)
            )

    best = _argmin_curve(curve)
    subset, res = fits[best]
    beta_orig, shift = unstandardize_coefficients(ds, subset, res.coefficients)
    report = FitReport(
        method=METHOD_ROBUST if robust else METHOD_LINEAR,
        selected=subset,
        coefficients=beta_orig,
        intercept=y_mean + shift,
        criterion=curve[best][1],
        criterion_curve=tuple(curve),
        screen_size=m_eff,
        path_length=len(curve) - 1,
        timings_ms=timings,
        warnings=tuple(warnings),
    )
    return report


def fit_linear(d: Dataset, m: int | None = None) -> FitReport:
    """Gaussian-code selection: SIS, lasso ordering, least-squares refits."""
    return _fit_linear_family(d, m, robust=False)


def fit_robust(d: Dataset, m: int | None = None) -> FitReport:
    """Laplace-code selection: SIS, winsorized ordering, LAD refits."""
    return _fit_linear_family(d, m, robust=True)


def _additive_refit(blocks, y, robust):
    # Each centered spline block sums to zero across its columns, so the
    # stacked design is rank deficient by construction; the minimum-norm
    # solve projects onto the span, which is all the criterion needs.
    n = y.shape[0]
    M = np.hstack([np.ones((n, 1))] + blocks)
    fit = lad_matrix if robust else ols_matrix
    return fit(M, y, min_norm=True)


def fit_additive(
    d: Dataset,
    m: int | None = None,
    spec: SplineBasisSpec = SplineBasisSpec(),
    robust: bool = False,
) -> FitReport:
    """Additive-model selection with per-covariate spline components.

    Covariates are screened by marginal spline fits, ordered by group-lasso
    activation, and the nested group candidates are refit (least squares,
    or LAD when ``robust``) with an explicit intercept column. The
    criterion charges each selected component its ``d_n`` coefficients.
    """
    n, p = d.n, d.p
    d_n = spec.basis_dim
    if m is None:
        m_eff = max(1, min(p, n // d_n - 1))
    else:
        m_eff = m

    timings = {}
    t0 = time.perf_counter()
    screen = nis(d, m_eff, spec)
    timings["screen_ms"] = (time.perf_counter() - t0) * 1e3

    t0 = time.perf_counter()
    design = build_additive_design(d, screen.survivors, spec)
    timings["design_ms"] = (time.perf_counter() - t0) * 1e3

    y = np.asarray(d.y, dtype=float)
    t0 = time.perf_counter()
    path = group_lasso_order(design, y - y.mean())
    timings["path_ms"] = (time.perf_counter() - t0) * 1e3

    crit_fn = mdl_additive_robust if robust else mdl_additive
    coef_cap = max(1, n // 2)

    t0 = time.perf_counter()
    warnings: list[str] = []
    curve: list[tuple[int, float]] = []
    fits: list[tuple[tuple[int, ...], object]] = []
    for q in range(0, len(path.activation_order) + 1):
        groups = path.activation_order[:q]
        n_coefs = q * d_n
        if n_coefs >= n or n_coefs + 1 > n - 1:
            warnings.append(
                f"candidate with {q} groups ({n_coefs} coefficients) skipped: "
                f"not identifiable with n={n}"
            )
            break
        if n_coefs > coef_cap:
            warnings.append(
                f"candidate with {q} groups ({n_coefs} coefficients) skipped: "
                f"fewer than n/2 residual degrees of freedom (n={n})"
            )
            break
        blocks = [design.block(g - 1) for g in groups]
        try:
            res = _additive_refit(blocks, y, robust)
        except SingularDesignError as exc:
            warnings.append(f"candidate with {q} groups skipped: {exc}")
            continue
        loss = res.sae if robust else res.rss
        value = crit_fn(loss, q, d_n, n, p)
        curve.append((q, value.total))
        fits.append((groups, res))
    timings["refit_ms"] = (time.perf_counter() - t0) * 1e3

    if not curve:
        raise NumericalError("no additive candidate could be refit")

    best = _argmin_curve(curve)
    groups, res = fits[best]
    # Blocks entered the design in path order; report them sorted by
    # covariate index.
    chosen = sorted(groups, key=lambda g: design.group_index[g - 1])
    coef_blocks = []
    group_values = {}
    for rank, g in enumerate(groups):
        block_coef = res.coefficients[1 + rank * d_n : 1 + (rank + 1) * d_n]
        covariate = design.group_index[g - 1]
        group_values[covariate] = design.block(g - 1) @ block_coef
    for g in chosen:
        rank = groups.index(g)
        coef_blocks.append(res.coefficients[1 + rank * d_n : 1 + (rank + 1) * d_n])
    coefficients = (
        np.concatenate(coef_blocks) if coef_blocks else np.zeros(0)
    )
    selected = ModelSubset(
        [design.group_index[g - 1] for g in groups], kind="additive-group"
    )
    return FitReport(
        method=METHOD_ADDITIVE_ROBUST if robust else METHOD_ADDITIVE,
        selected=selected,
        coefficients=coefficients,
        intercept=float(res.coefficients[0]),
        criterion=curve[best][1],
        criterion_curve=tuple(curve),
        screen_size=m_eff,
        path_length=len(curve) - 1,
        timings_ms=timings,
        warnings=tuple(warnings),
        group_values=group_values,
        basis_dim=d_n,
    )


def _count_candidates(p: int, max_size: int) -> int:
    return sum(math.comb(p, k) for k in range(0, max_size + 1))


def exhaustive_oracle(
    d: Dataset,
    max_size: int,
    criterion: str = METHOD_LINEAR,
    spec: SplineBasisSpec = SplineBasisSpec(),
) -> FitReport:
    """Best subset by brute force, for validating the pipelines.

    Enumerates every subset up to ``max_size`` (sizes ascending, then
    lexicographic), refits each by the criterion's own likelihood, and
    returns the global minimizer; ties break to the smaller subset and then
    lexicographically, which the enumeration order provides. Refuses to
    enumerate more than 1e6 subsets.
    """
    if criterion not in ALL_METHODS:
        raise InputError(
            f"unknown criterion {criterion!r}; expected one of {ALL_METHODS}"
        )
    n, p = d.n, d.p
    if not (0 <= max_size <= p):
        raise InputError(f"max_size must be in [0, {p}], got {max_size}")
    total = _count_candidates(p, max_size)
    if total > ORACLE_BUDGET:
        raise InputError(
            f"exhaustive enumeration of {total} candidate subsets exceeds "
            f"the budget of {ORACLE_BUDGET}"
        )

    robust = criterion in (METHOD_ROBUST, METHOD_ADDITIVE_ROBUST)
    additive = criterion in (METHOD_ADDITIVE, METHOD_ADDITIVE_ROBUST)
    timings = {}
    warnings: list[str] = []
    t0 = time.perf_counter()

    best_key = None
    best_subset = None
    best_per_size: dict[int, float] = {}
    evaluated = 0

    if not additive:
        ds = standardize(d)
        y_mean = float(d.y.mean())
        y_c = d.y - y_mean
        Z = ds.X
        G = Z.T @ Z
        c = Z.T @ y_c
        yy = float(y_c @ y_c)
        d_work = ds.with_y(y_c)

        for size in range(0, max_size + 1):
            if size > n - 1:
                warnings.append(
                    f"subsets of size {size} skipped: larger than n - 1"
                )
                break
            for combo in itertools.combinations(range(p), size):
                evaluated += 1
                if robust:
                    subset = ModelSubset([j + 1 for j in combo])
                    try:
                        res = lad(d_work, subset)
                    except SingularDesignError:
                        continue
                    value = mdl_robust(res.sae, size, n, p).total
                else:
                    if size == 0:
                        rss = yy
                    else:
                        idx = np.asarray(combo)
                        Gs = G[np.ix_(idx, idx)]
                        cs = c[idx]
                        try:
                            beta = np.linalg.solve(Gs, cs)
                        except np.linalg.LinAlgError:
                            continue
                        if np.linalg.cond(Gs) > 1e12:
                            continue
                        rss = max(yy - float(cs @ beta), 0.0)
                    value = mdl_linear(rss, size, n, p).total
                if size not in best_per_size or value < best_per_size[size]:
                    best_per_size[size] = value
                if best_key is None or value < best_key:
                    best_key = value
                    best_subset = combo

        subset = ModelSubset([j + 1 for j in best_subset])
        refit = (lad if robust else ols)(d_work, subset)
        beta_orig, shift = unstandardize_coefficients(ds, subset, refit.coefficients)
        timings["search_ms"] = (time.perf_counter() - t0) * 1e3
        curve = tuple(sorted(best_per_size.items()))
        return FitReport(
            method=criterion,
            selected=subset,
            coefficients=beta_orig,
            intercept=y_mean + shift,
            criterion=best_key,
            criterion_curve=curve,
            screen_size=p,
            path_length=len(curve) - 1,
            timings_ms=timings,
            warnings=tuple(warnings),
            n_candidates=evaluated,
        )

    # Additive criteria: enumerate group subsets.
    d_n = spec.basis_dim
    all_groups = ModelSubset(range(1, p + 1), kind="additive-group")
    design = build_additive_design(d, all_groups, spec)
    y = np.asarray(d.y, dtype=float)
    for size in range(0, max_size + 1):
        if size * d_n + 1 > n - 1:
            warnings.append(
                f"group subsets of size {size} skipped: not identifiable "
                f"with n={n}"
            )
            break
        for combo in itertools.combinations(range(1, p + 1), size):
            evaluated += 1
            blocks = [design.block(g - 1) for g in combo]
            try:
                res = _additive_refit(blocks, y, robust)
            except SingularDesignError:
                continue
            loss = res.sae if robust else res.rss
            fn = mdl_additive_robust if robust else mdl_additive
            value = fn(loss, size, d_n, n, p).total
            if size not in best_per_size or value < best_per_size[size]:
                best_per_size[size] = value
            if best_key is None or value < best_key:
                best_key = value
                best_subset = combo

    groups = best_subset
    blocks = [design.block(g - 1) for g in groups]
    res = _additive_refit(blocks, y, robust)
    group_values = {
        g: design.block(g - 1) @ res.coefficients[1 + i * d_n : 1 + (i + 1) * d_n]
        for i, g in enumerate(groups)
    }
    timings["search_ms"] = (time.perf_counter() - t0) * 1e3
    curve = tuple(sorted(best_per_size.items()))
    return FitReport(
        method=criterion,
        selected=ModelSubset(groups, kind="additive-group"),
        coefficients=res.coefficients[1:],
        intercept=float(res.coefficients[0]),
        criterion=best_key,
        criterion_curve=curve,
        screen_size=p,
        path_length=len(curve) - 1,
        timings_ms=timings,
        warnings=tuple(warnings),
        group_values=group_values,
        basis_dim=d_n,
        n_candidates=evaluated,
    )
