"""Nested candidate paths: lasso, robust lasso, and group lasso orderings.

Stage 2 of the selection pipelines turns screened survivors into a single
nested sequence of candidate models: the order in which variables (or
spline groups) first become active along a regularization path. Only first
activations matter; a variable that later leaves the lasso path keeps its
original position, so candidate k is always the first k activated indices
and the candidates are nested by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import ConvergenceError, InputError
from .splines import AdditiveDesign

#: Path is stopped when the top residual correlation falls below this
#: fraction of its starting value (the residual is numerically exhausted).
LARS_STOP_RTOL = 1e-12

#: Winsorization width, in consistent median absolute deviations.
WINSOR_C = 2.0

#: Normal-consistency factor for the median absolute deviation.
MAD_SCALE = 1.4826

GROUP_GRID_SIZE = 100
GROUP_GRID_MIN_RATIO = 1e-3
GROUP_BCD_TOL = 1e-9
GROUP_BCD_MAX_SWEEPS = 10_000


@dataclass(frozen=True)
class NestedPath:
    """First-activation order of a regularization path.

    ``activation_order`` holds distinct 1-based indices (column positions
    for linear paths, group positions for group paths) in the order they
    first entered the path. ``max_models`` is the truncation bound that
    applied, so ``len(activation_order) <= max_models`` and candidate k is
    the first k entries.
    """

    activation_order: tuple[int, ...]
    max_models: int

    def __post_init__(self):
        order = tuple(int(i) for i in self.activation_order)
        if any(i < 1 for i in order):
            raise InputError("activation order indices are 1-based")
        if len(set(order)) != len(order):
            raise InputError("activation order must not repeat indices")
        if len(order) > self.max_models:
            raise InputError(
                f"path of length {len(order)} exceeds max_models={self.max_models}"
            )
        object.__setattr__(self, "activation_order", order)


def _lars_first_activations(G: np.ndarray, c0: np.ndarray, max_steps: int):
    """First-activation order of the lasso path, from sufficient statistics.

    Runs the LARS recursion with the lasso modification (coefficients that
    hit zero leave the active set) on the Gram matrix ``G = X^T X`` and the
    correlation vector ``c0 = X^T y``. Returns 0-based indices in first
    activation order.
    """
    p = G.shape[0]
    beta = np.zeros(p)
    active: list[int] = []
    order: list[int] = []
    is_active = np.zeros(p, dtype=bool)
    # A dropped variable may re-enter the path; only its first activation
    # is recorded, so membership in `order` is tracked separately.
    seen = np.zeros(p, dtype=bool)

    def record(j: int) -> None:
        if not seen[j]:
            seen[j] = True
            order.append(j)

    c_start = float(np.max(np.abs(c0))) if p else 0.0
    if c_start <= 0.0 or max_steps < 1:
        return order
    stop_level = LARS_STOP_RTOL * c_start

    # Drop events make the number of iterations exceed the number of
    # activations; the cap only guards against numerically stuck cycles.
    for _ in range(8 * max_steps + 16):
        cc = c0 - G @ beta
        if not active:
            j = int(np.argmax(np.abs(cc)))
            if abs(cc[j]) <= stop_level:
                break
            active.append(j)
            is_active[j] = True
            record(j)
            if len(order) >= max_steps:
                break

        idx = np.asarray(active)
        C = float(np.max(np.abs(cc[idx])))
        if C <= stop_level:
            break
        s = np.where(cc[idx] >= 0.0, 1.0, -1.0)
        GA = G[np.ix_(idx, idx)]
        try:
            w = np.linalg.solve(GA, s)
        except np.linalg.LinAlgError:
            break
        swn = float(s @ w)
        if swn <= 0.0:
            break
        AA = 1.0 / np.sqrt(swn)
        wA = AA * w
        a = G[:, idx] @ wA

        # Step length to the next entrant among inactive variables.
        gamma_full = C / AA
        gamma_entry = gamma_full
        entrant = -1
        inactive = np.flatnonzero(~is_active)
        for j in inactive:
            for num, den in ((C - cc[j], AA - a[j]), (C + cc[j], AA + a[j])):
                if den > 1e-14:
                    g = num / den
                    if 1e-14 < g < gamma_entry - 1e-14:
                        gamma_entry = g
                        entrant = int(j)

        # Step length to the first active coefficient crossing zero.
        gamma_drop = np.inf
        dropped = -1
        for k, jk in enumerate(idx):
            if wA[k] != 0.0:
                g = -beta[jk] / wA[k]
                if 1e-14 < g < gamma_drop - 1e-14:
                    gamma_drop = g
                    dropped = int(jk)

        gamma = min(gamma_entry, gamma_drop)
        if not np.isfinite(gamma) or gamma <= 0.0:
            break
        beta[idx] += gamma * wA

        if gamma_drop < gamma_entry - 1e-14:
            beta[dropped] = 0.0
            active.remove(dropped)
            is_active[dropped] = False
            continue
        if entrant < 0:
            break  # took the full step: residual correlations are zero
        active.append(entrant)
        is_active[entrant] = True
        record(entrant)
        if len(order) >= max_steps:
            break
    return order


def lasso_order(d: Dataset, max_steps: int | None = None) -> NestedPath:
    """Order the columns of a standardized dataset by lasso activation.

    The path is truncated at ``min(p, n - 1)`` entries (fewer if the
    residual is exhausted first); ``max_steps`` can lower that bound.
    """
    if not d.standardized:
        raise InputError("lasso_order requires a standardized dataset")
    cap = min(d.p, d.n - 1)
    if max_steps is not None:
        if max_steps < 1:
            raise InputError(f"max_steps must be >= 1, got {max_steps}")
        cap = min(cap, max_steps)
    G = d.X.T @ d.X
    c = d.X.T @ d.y
    order = _lars_first_activations(G, c, cap)
    return NestedPath(tuple(i + 1 for i in order), max_models=cap)


def _winsorize(v: np.ndarray) -> np.ndarray:
    med = float(np.median(v))
    mad = float(np.median(np.abs(v - med))) * MAD_SCALE
    if mad == 0.0:
        mad = float(np.std(v))
    if mad == 0.0:
        return v.copy()
    half = WINSOR_C * mad
    return np.clip(v, med - half, med + half)


def robust_order(d: Dataset, max_steps: int | None = None) -> NestedPath:
    """Lasso activation order computed from winsorized data.

    Every correlation the LARS recursion consumes is replaced by the
    adjusted-winsorized correlation: each standardized column and the
    centered response are clamped at median +/- 2 consistent MADs, the
    clamped columns are re-standardized, and the ordinary recursion runs
    on the winsorized cross products. Gross outliers therefore enter every
    inner product with bounded leverage.
    """
    if not d.standardized:
        raise InputError("robust_order requires a standardized dataset")
    cap = min(d.p, d.n - 1)
    if max_steps is not None:
        if max_steps < 1:
            raise InputError(f"max_steps must be >= 1, got {max_steps}")
        cap = min(cap, max_steps)

    Zw = np.empty_like(d.X)
    for j in range(d.p):
        col = _winsorize(d.X[:, j])
        col = col - col.mean()
        sd = float(np.sqrt(np.mean(col**2)))
        Zw[:, j] = col / sd if sd > 0.0 else col
    yw = _winsorize(np.asarray(d.y, dtype=float))
    yw = yw - yw.mean()

    G = Zw.T @ Zw
    c = Zw.T @ yw
    order = _lars_first_activations(G, c, cap)
    return NestedPath(tuple(i + 1 for i in order), max_models=cap)


# ---------------------------------------------------------------------------
# Group lasso
# ---------------------------------------------------------------------------


class _GroupProblem:
    """Precomputed sufficient statistics for block coordinate descent."""

    def __init__(self, B: np.ndarray, y: np.ndarray, block_size: int):
        n, total = B.shape
        if total == 0:
            raise InputError("group lasso needs a nonempty design")
        if total % block_size != 0:
            raise InputError(
                f"design width {total} is not a multiple of block size {block_size}"
            )
        if y.shape != (n,):
            raise InputError(f"y has shape {y.shape}, design has {n} rows")
        self.q = total // block_size
        self.d = block_size
        self.G = B.T @ B
        self.c = B.T @ y
        self.yy = float(y @ y)
        self.weight = np.sqrt(block_size)
        # Per-block eigendecompositions for exact block minimization.
        self.eigvals = []
        self.eigvecs = []
        for g in range(self.q):
            sl = self._slice(g)
            lam, Q = np.linalg.eigh(self.G[sl, sl])
            self.eigvals.append(np.maximum(lam, 0.0))
            self.eigvecs.append(Q)

    def _slice(self, g: int) -> slice:
        return slice(g * self.d, (g + 1) * self.d)

    def objective(self, alpha: np.ndarray, lam: float) -> float:
        quad = 0.5 * float(alpha @ (self.G @ alpha)) - float(self.c @ alpha)
        pen = sum(
            float(np.linalg.norm(alpha[self._slice(g)])) for g in range(self.q)
        )
        return quad + 0.5 * self.yy + lam * self.weight * pen

    def block_minimize(self, z: np.ndarray, g: int, lam_g: float) -> np.ndarray:
        """Exact minimizer of one block subproblem.

        Solves min over v of ``0.5 v^T G_gg v - z^T v + lam_g * ||v||``.
        If ``||z|| <= lam_g`` the minimizer is 0; otherwise the stationarity
        condition ``(G_gg + (lam_g/nu) I) v = z`` with ``nu = ||v||`` is
        solved in the eigenbasis by a scalar bisection on nu.
        """
        znorm = float(np.linalg.norm(z))
        if znorm <= lam_g:
            return np.zeros(self.d)
        lam_e = self.eigvals[g]
        Q = self.eigvecs[g]
        zt = Q.T @ z
        zt2 = zt**2

        def f(nu: float) -> float:
            return float(np.sum(zt2 / (lam_e * nu + lam_g) ** 2))

        lo = 0.0  # f(lo) = ||z||^2 / lam_g^2 > 1
        hi = (znorm - lam_g) / max(float(lam_e.max()), 1e-300)
        hi = max(hi, 1e-300)
        for _ in range(200):
            if f(hi) < 1.0:
                break
            hi *= 2.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if f(mid) > 1.0:
                lo = mid
            else:
                hi = mid
        nu = 0.5 * (lo + hi)
        vt = nu * zt / (lam_e * nu + lam_g)
        return Q @ vt


def group_lasso_solve(
    B: np.ndarray,
    y: np.ndarray,
    lam: float,
    block_size: int,
    alpha0: np.ndarray | None = None,
    tol: float = GROUP_BCD_TOL,
    max_sweeps: int = GROUP_BCD_MAX_SWEEPS,
    track_objective: bool = False,
    _problem: "_GroupProblem | None" = None,
):
    """Solve one group-lasso problem by block coordinate descent.

    Minimizes ``0.5 ||y - B alpha||^2 + lam * sum_j sqrt(d) ||alpha_j||``
    over blocks of ``block_size`` consecutive columns. Every block update
    is an exact minimization of the block subproblem, so the objective is
    non-increasing at each update. Iteration stops when a full sweep
    changes the objective by less than ``tol`` in relative terms.

    Returns ``(alpha, info)`` where ``info`` is a dict with the sweep
    count, the final objective, and (when ``track_objective``) the
    objective after every block update.
    """
    if lam < 0:
        raise InputError(f"lambda must be >= 0, got {lam}")
    prob = _problem if _problem is not None else _GroupProblem(
        np.asarray(B, dtype=float), np.asarray(y, dtype=float), block_size
    )
    alpha = (
        np.zeros(prob.q * prob.d) if alpha0 is None else np.array(alpha0, dtype=float)
    )
    if alpha.shape != (prob.q * prob.d,):
        raise InputError("alpha0 has the wrong length")

    lam_g = lam * prob.weight
    galpha = prob.G @ alpha
    obj = prob.objective(alpha, lam)
    trace = [obj] if track_objective else None
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        for g in range(prob.q):
            sl = prob._slice(g)
            z = prob.c[sl] - galpha[sl] + prob.G[sl, sl] @ alpha[sl]
            new = prob.block_minimize(z, g, lam_g)
            delta = new - alpha[sl]
            if np.any(delta != 0.0):
                galpha += prob.G[:, sl] @ delta
                alpha[sl] = new
            if track_objective:
                trace.append(prob.objective(alpha, lam))
        new_obj = prob.objective(alpha, lam)
        if abs(obj - new_obj) <= tol * max(abs(obj), 1e-12):
            obj = new_obj
            converged = True
            break
        obj = new_obj

    if not converged:
        raise ConvergenceError(
            f"group lasso did not converge at lambda={lam:.8g} within "
            f"{max_sweeps} sweeps",
            lam=lam,
        )
    info = {"sweeps": sweeps, "objective": obj}
    if track_objective:
        info["objective_trace"] = trace
    return alpha, info


def group_lasso_order(design: AdditiveDesign, y: np.ndarray) -> NestedPath:
    """Order spline groups by first activation along a lambda grid.

    The grid has 100 geometrically spaced points from
    ``lambda_max = max_j ||B_j^T y|| / sqrt(d_n)`` down to
    ``1e-3 * lambda_max``, solved with warm starts. Groups are recorded the
    first time their coefficient block becomes nonzero; when several
    activate at the same grid point they are recorded in decreasing block
    norm. The path is truncated at ``floor((n - 1) / d_n)`` groups.
    """
    y = np.asarray(y, dtype=float)
    B = design.B
    n = B.shape[0]
    d = design.block_size
    q = design.n_groups
    if y.shape != (n,):
        raise InputError(f"y has shape {y.shape}, design has {n} rows")
    max_models = (n - 1) // d
    if max_models < 1:
        raise InputError(
            f"no group model is identifiable: n={n} allows at most "
            f"{(n - 1) // d} groups of {d} coefficients"
        )

    prob = _GroupProblem(B, y, d)
    norms = np.array(
        [np.linalg.norm(prob.c[g * d : (g + 1) * d]) for g in range(q)]
    )
    lam_max = float(norms.max()) / prob.weight
    if lam_max <= 0.0:
        return NestedPath((), max_models=max_models)

    grid = np.geomspace(lam_max, GROUP_GRID_MIN_RATIO * lam_max, GROUP_GRID_SIZE)
    order: list[int] = []
    seen = np.zeros(q, dtype=bool)
    alpha = np.zeros(q * d)
    for lam in grid:
        alpha, _ = group_lasso_solve(
            B, y, float(lam), d, alpha0=alpha, _problem=prob
        )
        block_norms = np.array(
            [np.linalg.norm(alpha[g * d : (g + 1) * d]) for g in range(q)]
        )
        fresh = np.flatnonzero((block_norms > 0.0) & ~seen)
        if fresh.size:
            # Larger blocks activated earlier within this grid step.
            for g in sorted(fresh, key=lambda i: (-block_norms[i], i)):
                if len(order) < max_models:
                    order.append(int(g))
                seen[g] = True
        if len(order) >= max_models or seen.all():
            break
    return NestedPath(tuple(g + 1 for g in order), max_models=max_models)
