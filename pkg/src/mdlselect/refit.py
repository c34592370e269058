"""Maximum-likelihood refits on fixed subsets: least squares and LAD.

Both fitters are deliberately intercept-free: the surrounding pipeline
decides what centering or explicit intercept columns to use. The matrix
level entry points (:func:`ols_matrix`, :func:`lad_matrix`) operate on an
explicit design; the dataset-level wrappers select subset columns first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dataset import Dataset, ModelSubset
from .errors import InputError, SingularDesignError

#: Smallest accepted ratio of extreme singular values of a design.
RANK_RTOL = 1e-10

#: Residual smoothing floor for the LAD reweighting.
LAD_EPS = 1e-8

#: Relative SAE improvement below which the LAD iteration is converged.
LAD_TOL = 1e-8

LAD_MAX_ITER = 200

#: Exchange steps allowed when polishing an LAD fit to a vertex optimum.
LAD_POLISH_MAX_STEPS = 200

#: Dual-feasibility slack accepted by the polish certificate.
LAD_CERT_TOL = 1e-9


@dataclass(frozen=True)
class RefitResult:
    """Coefficients and residual summaries of a subset refit.

    ``sigma2_hat = rss / n`` and ``b_hat = sae / n`` are the plug-in scale
    estimates used by the selection criteria. ``converged`` is always True
    for least squares; for LAD it reports whether the reweighting loop met
    its tolerance within the iteration budget (the best iterate is returned
    either way).
    """

    subset: ModelSubset
    coefficients: np.ndarray
    rss: float
    sae: float
    sigma2_hat: float
    b_hat: float
    converged: bool
    iterations: int


def _offending_columns(M: np.ndarray, rank: int) -> list[int]:
    # Pivoted QR: the pivots beyond the numerical rank name columns that
    # add no independent direction.
    _, _, piv = scipy.linalg.qr(M, mode="economic", pivoting=True)
    return sorted(int(c) + 1 for c in piv[rank:])


def _check_shape(M: np.ndarray, y: np.ndarray, what: str) -> None:
    n = y.shape[0]
    if M.shape[0] != n:
        raise InputError(f"{what}: design has {M.shape[0]} rows, y has {n}")
    if M.shape[1] > n - 1:
        raise InputError(
            f"{what}: {M.shape[1]} coefficients with only {n} observations "
            "(need size <= n - 1)"
        )


def _empty_result(subset: ModelSubset, y: np.ndarray) -> RefitResult:
    n = y.shape[0]
    rss = float(y @ y)
    sae = float(np.abs(y).sum())
    return RefitResult(
        subset=subset,
        coefficients=np.zeros(0),
        rss=rss,
        sae=sae,
        sigma2_hat=rss / n,
        b_hat=sae / n,
        converged=True,
        iterations=0,
    )


def _solve_ls(
    M: np.ndarray, y: np.ndarray, columns_for_error, min_norm: bool = False
) -> np.ndarray:
    """Least-squares solve, strict about rank unless ``min_norm``.

    With ``min_norm`` the small singular directions are truncated and the
    minimum-norm solution is returned instead of failing; fitted values are
    then the (unique) projection of ``y`` onto the column span. Centered
    spline blocks need this: their columns sum to zero by construction, so
    one null direction per block is structural rather than a data defect.
    """
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0.0 or s[-1] < RANK_RTOL * s[0]:
        if not min_norm:
            rank = int(np.sum(s >= RANK_RTOL * max(s[0], np.finfo(float).tiny)))
            offending = _offending_columns(M, rank)
            named = [columns_for_error[c - 1] for c in offending]
            raise SingularDesignError(
                f"design is rank deficient (rank {rank} of {M.shape[1]}); "
                f"dependent columns: {named}",
                columns=named,
            )
        if s[0] == 0.0:
            return np.zeros(M.shape[1])
        keep = s >= RANK_RTOL * s[0]
        return Vt[keep].T @ ((U[:, keep].T @ y) / s[keep])
    return Vt.T @ ((U.T @ y) / s)


def ols_matrix(
    M: np.ndarray, y: np.ndarray, column_labels=None, min_norm: bool = False
) -> RefitResult:
    """Least squares on an explicit design matrix (no subset semantics)."""
    M = np.asarray(M, dtype=float)
    y = np.asarray(y, dtype=float)
    subset = ModelSubset(range(1, M.shape[1] + 1)) if M.shape[1] else ModelSubset()
    if M.shape[1] == 0:
        return _empty_result(subset, y)
    _check_shape(M, y, "ols")
    labels = column_labels or list(range(1, M.shape[1] + 1))
    beta = _solve_ls(M, y, labels, min_norm=min_norm)
    r = y - M @ beta
    rss = float(r @ r)
    sae = float(np.abs(r).sum())
    n = y.shape[0]
    return RefitResult(subset, beta, rss, sae, rss / n, sae / n, True, 1)


def _lad_active_set(Q: np.ndarray, residuals: np.ndarray) -> list[int] | None:
    """Pick r independent rows of Q, preferring the smallest residuals.

    Greedy Gram-Schmidt over rows ordered by |residual|; returns None when
    no independent set of full size exists among usable rows.
    """
    n, r = Q.shape
    order = np.argsort(np.abs(residuals), kind="stable")
    chosen: list[int] = []
    basis = np.zeros((r, r))
    for i in order:
        q = Q[i].copy()
        for k in range(len(chosen)):
            q -= (basis[k] @ q) * basis[k]
        norm = float(np.linalg.norm(q))
        if norm > 1e-8 * max(float(np.linalg.norm(Q[i])), 1e-300):
            basis[len(chosen)] = q / norm
            chosen.append(int(i))
            if len(chosen) == r:
                return chosen
    return None


def _lad_polish(Q: np.ndarray, y: np.ndarray, residuals: np.ndarray):
    """Descend to a vertex of the LAD problem min ||y - Q gamma||_1.

    ``Q`` must have orthonormal (independent) columns. Starting from the
    active set suggested by ``residuals``, repeatedly solve the vertex,
    check the dual certificate (|lambda| <= 1 on active rows), and when it
    fails exchange the worst active row for the breakpoint row that makes
    the piecewise-linear objective turn upward. Every exchange strictly
    decreases the objective, so the walk terminates; the iteration cap is
    a numerical safety net. Returns ``(gamma, sae, certified)`` or None
    when a degenerate configuration blocks the walk.
    """
    n, r = Q.shape
    active = _lad_active_set(Q, residuals)
    if active is None:
        return None
    best = None
    for _ in range(LAD_POLISH_MAX_STEPS):
        QA = Q[active]
        try:
            gamma = np.linalg.solve(QA, y[active])
        except np.linalg.LinAlgError:
            return best
        res = y - Q @ gamma
        res[active] = 0.0
        sae = float(np.abs(res).sum())
        if best is not None and sae > best[1] + 1e-12 * (1.0 + best[1]):
            return best
        if best is None or sae < best[1]:
            best = (gamma, sae, False)

        mask = np.ones(n, dtype=bool)
        mask[active] = False
        signs = np.sign(res[mask])
        try:
            lam = np.linalg.solve(QA.T, Q[mask].T @ signs)
        except np.linalg.LinAlgError:
            return best
        j_local = int(np.argmax(np.abs(lam)))
        if abs(lam[j_local]) <= 1.0 + LAD_CERT_TOL:
            return gamma, sae, True

        # Move off the worst active row: direction keeps the other active
        # residuals at zero and grows this one with unit speed.
        e = np.zeros(r)
        e[j_local] = np.sign(lam[j_local])
        try:
            d = np.linalg.solve(QA, e)
        except np.linalg.LinAlgError:
            return best
        u = Q @ d
        slope = 1.0 - abs(lam[j_local])
        inactive = np.flatnonzero(mask)
        with np.errstate(divide="ignore", invalid="ignore"):
            steps = res[inactive] / u[inactive]
        valid = np.isfinite(steps) & (steps > 0.0)
        if not np.any(valid):
            return best
        cand = inactive[valid]
        cand_steps = steps[valid]
        order = np.argsort(cand_steps, kind="stable")
        enter = -1
        for idx in order:
            slope += 2.0 * abs(u[cand[idx]])
            if slope >= 0.0:
                enter = int(cand[idx])
                break
        if enter < 0:
            return best  # objective unbounded along d: numerically degenerate
        active[j_local] = enter
    return best


def lad_matrix(
    M: np.ndarray,
    y: np.ndarray,
    column_labels=None,
    max_iter: int = LAD_MAX_ITER,
    tol: float = LAD_TOL,
    min_norm: bool = False,
) -> RefitResult:
    """Least absolute deviations on an explicit design matrix.

    Iteratively reweighted least squares with weights
    ``1 / max(|r_i|, eps)``; each step solves a weighted least-squares
    problem. The loop stops when the sum of absolute errors improves by
    less than ``tol`` in relative terms, and the best iterate seen is
    returned (with ``converged=False`` if the budget ran out first).
    """
    M = np.asarray(M, dtype=float)
    y = np.asarray(y, dtype=float)
    subset = ModelSubset(range(1, M.shape[1] + 1)) if M.shape[1] else ModelSubset()
    if M.shape[1] == 0:
        return _empty_result(subset, y)
    _check_shape(M, y, "lad")
    labels = column_labels or list(range(1, M.shape[1] + 1))

    # Start from the least-squares fit; its rank check also covers LAD.
    beta = _solve_ls(M, y, labels, min_norm=min_norm)
    # Row scaling preserves the design's right null space, so the weighted
    # subproblems share the structural rank of M; the lstsq cutoff keeps
    # their minimum-norm solutions consistent with the initializer.
    rcond = RANK_RTOL if min_norm else None
    r = y - M @ beta
    sae = float(np.abs(r).sum())
    best_beta, best_sae = beta, sae
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        w = 1.0 / np.maximum(np.abs(r), LAD_EPS)
        sw = np.sqrt(w)
        beta, *_ = np.linalg.lstsq(M * sw[:, None], y * sw, rcond=rcond)
        r = y - M @ beta
        new_sae = float(np.abs(r).sum())
        if new_sae < best_sae:
            best_beta, best_sae = beta, new_sae
        if abs(sae - new_sae) <= tol * max(sae, np.finfo(float).tiny):
            sae = new_sae
            converged = True
            break
        sae = new_sae

    # The reweighted loop can stall shy of the exact minimizer, so finish
    # with a vertex-exchange descent on the column space of M. Reducing to
    # an orthonormal basis Q keeps the walk well conditioned, and mapping
    # the vertex back through the pseudoinverse preserves the minimum-norm
    # convention used above.
    if best_sae > 0.0:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
        keep = s >= RANK_RTOL * s[0] if s.size and s[0] > 0.0 else np.zeros_like(s, dtype=bool)
        if np.any(keep):
            polished = _lad_polish(U[:, keep], y, y - M @ best_beta)
            if polished is not None:
                gamma, polished_sae, certified = polished
                if polished_sae < best_sae:
                    best_beta = Vt[keep].T @ (gamma / s[keep])
                    best_sae = polished_sae
                if certified:
                    converged = True

    r_best = y - M @ best_beta
    rss = float(r_best @ r_best)
    n = y.shape[0]
    return RefitResult(
        subset,
        best_beta,
        rss,
        best_sae,
        rss / n,
        best_sae / n,
        converged,
        iterations,
    )


def _subset_design(d: Dataset, subset: ModelSubset):
    subset.validate_against(d.p)
    pos = subset.positions()
    labels = [d.names[i] for i in pos]
    return d.X[:, pos], labels


def ols(d: Dataset, subset: ModelSubset) -> RefitResult:
    """Least squares of ``d.y`` on the subset columns of ``d.X``.

    The empty subset is valid and scores the null model:
    ``rss = y @ y`` and ``sae = sum(|y|)``.
    """
    if len(subset) == 0:
        return _empty_result(subset, np.asarray(d.y, dtype=float))
    M, labels = _subset_design(d, subset)
    res = ols_matrix(M, d.y, column_labels=labels)
    return RefitResult(
        subset, res.coefficients, res.rss, res.sae,
        res.sigma2_hat, res.b_hat, res.converged, res.iterations,
    )


def lad(
    d: Dataset,
    subset: ModelSubset,
    max_iter: int = LAD_MAX_ITER,
    tol: float = LAD_TOL,
) -> RefitResult:
    """Least absolute deviations of ``d.y`` on the subset columns."""
    if len(subset) == 0:
        return _empty_result(subset, np.asarray(d.y, dtype=float))
    M, labels = _subset_design(d, subset)
    res = lad_matrix(M, d.y, column_labels=labels, max_iter=max_iter, tol=tol)
    return RefitResult(
        subset, res.coefficients, res.rss, res.sae,
        res.sigma2_hat, res.b_hat, res.converged, res.iterations,
    )
