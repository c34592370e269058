"""Exception types shared across the package.

Callers mostly care about two families: :class:`InputError` covers bad
files, bad arguments, and violated call contracts, while
:class:`NumericalError` covers failures of the numerical machinery itself.
The command line maps the first family to exit code 2 and the second to
exit code 3.
"""


class MdlSelectError(Exception):
    """Base class for every package-specific error."""


class InputError(MdlSelectError):
    """Malformed files, out-of-range arguments, or violated preconditions."""


class NumericalError(MdlSelectError):
    """A numerical procedure failed (singular system, no convergence)."""


class SingularDesignError(NumericalError):
    """Design matrix is rank deficient beyond the accepted tolerance.

    ``columns`` holds the labels of columns implicated in the deficiency
    (the pivots beyond the numerical rank): dataset column names when the
    design came from a Dataset, 1-based positions otherwise.
    """

    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class ConvergenceError(NumericalError):
    """An iterative solver exhausted its iteration budget.

    ``lam`` carries the penalty level at which a path solver gave up, when
    that is meaningful.
    """

    def __init__(self, message, lam=None):
        super().__init__(message)
        self.lam = lam
