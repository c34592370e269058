"""Two-part code-length criteria for model selection.

Each criterion is the length, in nats, of a two-part code for the response:
a fidelity term (the negative maximized log-likelihood of the residuals, up
to constants that do not depend on the model) plus a code for the fitted
parameters and for which predictors were used.

For a linear model with subset S, Gaussian errors, and the plug-in variance
``sigma2 = RSS/n``, the criterion is

    (n/2) * log(RSS/n) + (|S|/2) * log(n) + |S| * log(p).

The robust variant replaces the Gaussian residual code with the Laplace one
at the plug-in scale ``b = SAE/n``:

    n * log(SAE/n) + (|S|/2) * log(n) + |S| * log(p).

For additive models fitted with ``d_n`` spline coefficients per selected
component, the parameter code counts all ``q * d_n`` coefficients:

    (n/2) * log(RSS/n) + (q * d_n / 2) * log(n) + q * log(p),

and analogously with ``n * log(SAE/n)`` for the robust additive criterion.

All logarithms are natural. Residual sums are floored at ``1e-12 * n`` so
that exact interpolation yields a finite (very negative) fidelity term
instead of -inf; size-based tie-breaking then favors the smaller model
among exact fits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InputError

#: Relative floor applied to RSS and SAE before taking logarithms.
FIDELITY_FLOOR_PER_OBS = 1e-12


@dataclass(frozen=True)
class MdlValue:
    """A criterion evaluation, broken into its three code-length terms.

    ``total`` always equals ``fidelity + param_code + index_code``.
    """

    total: float
    fidelity: float
    param_code: float
    index_code: float


def _check_common(size: int, n: int, p: int, what: str) -> None:
    if size < 0:
        raise InputError(f"{what}: model size must be >= 0, got {size}")
    if n < 1:
        raise InputError(f"{what}: n must be >= 1, got {n}")
    if p < 1:
        raise InputError(f"{what}: p must be >= 1, got {p}")
    if size > p:
        raise InputError(f"{what}: model size {size} exceeds p = {p}")


def code_length_parameters(size: int, n: int, p: int) -> tuple[float, float]:
    """Code lengths for the fitted parameters and the subset identity.

    Returns ``((size/2) * log(n), size * log(p))``. The first term prices
    each estimated coefficient at half a log(n) (the usual cost of encoding
    a root-n-consistent estimate); the second prices naming each selected
    column out of p candidates.
    """
    _check_common(size, n, p, "code_length_parameters")
    return (size / 2.0) * math.log(n), size * math.log(p)


def _fidelity(loss: float, n: int, half: bool, what: str) -> float:
    if loss < 0:
        raise InputError(f"{what}: residual sum must be >= 0, got {loss}")
    floored = max(loss, FIDELITY_FLOOR_PER_OBS * n)
    scale = n / 2.0 if half else float(n)
    return scale * math.log(floored / n)


def mdl_linear(rss: float, size: int, n: int, p: int) -> MdlValue:
    """Gaussian two-part criterion for a linear model of ``size`` predictors."""
    _check_common(size, n, p, "mdl_linear")
    fidelity = _fidelity(rss, n, half=True, what="mdl_linear")
    param, index = code_length_parameters(size, n, p)
    return MdlValue(fidelity + param + index, fidelity, param, index)


def mdl_robust(sae: float, size: int, n: int, p: int) -> MdlValue:
    """Laplace two-part criterion for a linear model of ``size`` predictors."""
    _check_common(size, n, p, "mdl_robust")
    fidelity = _fidelity(sae, n, half=False, what="mdl_robust")
    param, index = code_length_parameters(size, n, p)
    return MdlValue(fidelity + param + index, fidelity, param, index)


def mdl_additive(rss: float, q: int, d_n: int, n: int, p: int) -> MdlValue:
    """Gaussian criterion for an additive model with ``q`` components.

    Each selected component carries ``d_n`` fitted spline coefficients, so
    the parameter code is ``(q * d_n / 2) * log(n)`` while the index code
    still prices naming ``q`` covariates out of p.
    """
    _check_common(q, n, p, "mdl_additive")
    if d_n < 1:
        raise InputError(f"mdl_additive: d_n must be >= 1, got {d_n}")
    fidelity = _fidelity(rss, n, half=True, what="mdl_additive")
    param = (q * d_n / 2.0) * math.log(n)
    index = q * math.log(p)
    return MdlValue(fidelity + param + index, fidelity, param, index)


def mdl_additive_robust(sae: float, q: int, d_n: int, n: int, p: int) -> MdlValue:
    """Laplace criterion for an additive model with ``q`` components."""
    _check_common(q, n, p, "mdl_additive_robust")
    if d_n < 1:
        raise InputError(f"mdl_additive_robust: d_n must be >= 1, got {d_n}")
    fidelity = _fidelity(sae, n, half=False, what="mdl_additive_robust")
    param = (q * d_n / 2.0) * math.log(n)
    index = q * math.log(p)
    return MdlValue(fidelity + param + index, fidelity, param, index)
