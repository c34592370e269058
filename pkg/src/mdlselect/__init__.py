"""Model selection by two-part code length for sparse regression.

The package fits sparse linear, robust (Laplace-error), and nonparametric
additive regression models by minimizing a two-part description length over
a nested candidate path: screen marginally, order the survivors with a
(group) lasso path, refit each nested candidate by maximum likelihood, and
keep the subset with the shortest code. A simulation laboratory reproduces
the variable-selection benchmarks the criteria were designed for.
"""

from .criteria import (
    MdlValue,
    code_length_parameters,
    mdl_additive,
    mdl_additive_robust,
    mdl_linear,
    mdl_robust,
)
from .dataset import (
    Dataset,
    ModelSubset,
    load_csv,
    standardize,
    unstandardize_coefficients,
)
from .errors import (
    ConvergenceError,
    InputError,
    MdlSelectError,
    NumericalError,
    SingularDesignError,
)
from .paths import NestedPath, group_lasso_order, lasso_order, robust_order
from .pipeline import (
    FitReport,
    exhaustive_oracle,
    fit_additive,
    fit_linear,
    fit_robust,
)
from .refit import RefitResult, lad, ols
from .screening import ScreenResult, nis, sis
from .simlab import (
    ErrorLaw,
    SimConfig,
    SimReport,
    draw_errors,
    generate_additive,
    generate_linear,
    run_bench,
    score_selection,
    score_signal_mse,
)
from .splines import (
    AdditiveDesign,
    SplineBasisSpec,
    basis_eval,
    build_additive_design,
    knot_vector,
)

__version__ = "0.1.0"

__all__ = [
    "AdditiveDesign",
    "ConvergenceError",
    "Dataset",
    "ErrorLaw",
    "FitReport",
    "InputError",
    "MdlSelectError",
    "MdlValue",
    "ModelSubset",
    "NestedPath",
    "NumericalError",
    "RefitResult",
    "ScreenResult",
    "SimConfig",
    "SimReport",
    "SingularDesignError",
    "SplineBasisSpec",
    "basis_eval",
    "build_additive_design",
    "code_length_parameters",
    "draw_errors",
    "exhaustive_oracle",
    "fit_additive",
    "fit_linear",
    "fit_robust",
    "generate_additive",
    "generate_linear",
    "group_lasso_order",
    "knot_vector",
    "lad",
    "lasso_order",
    "load_csv",
    "mdl_additive",
    "mdl_additive_robust",
    "mdl_linear",
    "mdl_robust",
    "nis",
    "ols",
    "run_bench",
    "score_selection",
    "score_signal_mse",
    "sis",
    "standardize",
    "unstandardize_coefficients",
]
