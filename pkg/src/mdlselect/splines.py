"""B-spline bases and centered additive design matrices.

Bases are built on clamped (open) uniform knot vectors: the boundary knots
are repeated ``degree + 1`` times and the interior knots are evenly spaced,
so a basis of dimension ``d_n`` and degree ``l`` has ``d_n - l - 1``
interior knots. Evaluations outside the fitted domain are clamped to the
boundary, which extends each fitted component as a constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, ModelSubset
from .errors import InputError

#: Tolerance on the column means of a centered additive design.
CENTERING_TOL = 1e-10


@dataclass(frozen=True)
class SplineBasisSpec:
    """Shape of a B-spline basis: polynomial degree and total dimension."""

    degree: int = 3
    basis_dim: int = 9

    def __post_init__(self):
        if self.degree < 0:
            raise InputError(f"spline degree must be >= 0, got {self.degree}")
        if self.basis_dim < self.degree + 1:
            raise InputError(
                f"basis_dim must be at least degree + 1 "
                f"({self.degree + 1}), got {self.basis_dim}"
            )

    @property
    def interior_knots(self) -> int:
        return self.basis_dim - self.degree - 1


def knot_vector(spec: SplineBasisSpec, a: float, b: float) -> np.ndarray:
    """Clamped uniform knot vector on [a, b] for the given basis shape."""
    if not (a < b):
        raise InputError(f"domain must satisfy a < b, got [{a}, {b}]")
    interior = np.linspace(a, b, spec.interior_knots + 2)[1:-1]
    return np.concatenate(
        [np.full(spec.degree + 1, a), interior, np.full(spec.degree + 1, b)]
    )


def basis_eval(spec: SplineBasisSpec, a: float, b: float, x) -> np.ndarray:
    """Evaluate all basis functions at the points ``x``.

    Returns an array of shape ``(len(x), basis_dim)``. Each row sums to 1
    (partition of unity) and all values lie in [0, 1]. Points outside
    [a, b] are clamped to the nearest boundary before evaluation; x == a
    puts full weight on the first basis function and x == b on the last.

    The evaluation runs the standard Cox-de Boor triangle for the
    ``degree + 1`` basis functions that are nonzero on each point's knot
    span, vectorized over points.
    """
    t = knot_vector(spec, a, b)
    l = spec.degree
    d = spec.basis_dim
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise InputError("basis_eval expects a one-dimensional array of points")
    xc = np.clip(x, a, b)

    # Knot span index per point, restricted to the valid range [l, d-1] so
    # that the right boundary lands in the last non-degenerate interval.
    span = np.searchsorted(t, xc, side="right") - 1
    span = np.clip(span, l, d - 1)

    m = xc.shape[0]
    N = np.zeros((m, l + 1))
    N[:, 0] = 1.0
    left = np.zeros((m, l + 1))
    right = np.zeros((m, l + 1))
    for j in range(1, l + 1):
        left[:, j] = xc - t[span + 1 - j]
        right[:, j] = t[span + j] - xc
        saved = np.zeros(m)
        for r in range(j):
            denom = right[:, r + 1] + left[:, j - r]
            # Valid spans never produce a zero denominator; the guard only
            # protects against degenerate float corner cases.
            safe = np.where(denom != 0.0, denom, 1.0)
            temp = np.where(denom != 0.0, N[:, r] / safe, 0.0)
            N[:, r] = saved + right[:, r + 1] * temp
            saved = left[:, j - r] * temp
        N[:, j] = saved

    out = np.zeros((m, d))
    cols = span[:, None] - l + np.arange(l + 1)[None, :]
    np.put_along_axis(out, cols, N, axis=1)
    return out


@dataclass(frozen=True)
class AdditiveDesign:
    """Column-centered spline design for a set of additive components.

    ``B`` stacks one ``basis_dim``-column block per group, in the order of
    ``group_index`` (ascending covariate index). Each block was centered by
    subtracting its per-column training means, which are kept in
    ``col_offsets`` so new points can be mapped through the same transform.
    ``domain_bounds`` holds the observed (min, max) per covariate; new
    points are clamped into that interval.
    """

    B: np.ndarray
    group_index: tuple[int, ...]
    domain_bounds: tuple[tuple[float, float], ...]
    col_offsets: np.ndarray
    spec: SplineBasisSpec

    @property
    def n_groups(self) -> int:
        return len(self.group_index)

    @property
    def block_size(self) -> int:
        return self.spec.basis_dim

    def block(self, g: int) -> np.ndarray:
        """Centered design block for group position ``g`` (0-based)."""
        d = self.block_size
        return self.B[:, g * d : (g + 1) * d]

    def evaluate_group(self, g: int, x) -> np.ndarray:
        """Centered basis rows for group position ``g`` at new points."""
        a, b = self.domain_bounds[g]
        raw = basis_eval(self.spec, a, b, x)
        d = self.block_size
        return raw - self.col_offsets[g * d : (g + 1) * d]


def build_additive_design(
    d: Dataset, groups: ModelSubset, spec: SplineBasisSpec = SplineBasisSpec()
) -> AdditiveDesign:
    """Build the centered spline design for the named covariates.

    Each covariate gets its own basis on its observed range. Covariates
    with a degenerate range (constant columns) cannot support a basis and
    are rejected. Blocks are centered column by column, which removes the
    intercept direction from every block independently, so the block built
    for a group does not depend on which other groups are present.
    """
    if len(groups) == 0:
        raise InputError("build_additive_design requires at least one group")
    if groups.kind != "additive-group":
        groups = ModelSubset(groups.indices, kind="additive-group")
    groups.validate_against(d.p)

    blocks = []
    offsets = []
    bounds = []
    for j in groups.indices:
        x = d.X[:, j - 1]
        a, b = float(x.min()), float(x.max())
        if not (a < b):
            raise InputError(
                f"covariate {d.names[j - 1]!r} (index {j}) has a degenerate "
                "range and cannot support a spline basis"
            )
        raw = basis_eval(spec, a, b, x)
        mu = raw.mean(axis=0)
        blocks.append(raw - mu)
        offsets.append(mu)
        bounds.append((a, b))

    B = np.hstack(blocks)
    worst = float(np.max(np.abs(B.mean(axis=0))))
    if worst > CENTERING_TOL:
        raise InputError(
            f"centering failed: residual column mean {worst:.3g} exceeds "
            f"{CENTERING_TOL}"
        )
    return AdditiveDesign(
        B=B,
        group_index=groups.indices,
        domain_bounds=tuple(bounds),
        col_offsets=np.concatenate(offsets),
        spec=spec,
    )
