"""Exception hierarchy shared by all modules.

The CLI maps :class:`ValidationError` to exit code 1 and
:class:`ResolutionError` to exit code 2.
"""


class BosotopError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(BosotopError, ValueError):
    """Input violates a structural contract (shape, Hermiticity, signs...)."""


class NotPositiveDefiniteError(ValidationError):
    """A routine that needs H > 0 was handed an indefinite or singular H.

    Semi-definite inputs can be shifted with
    :func:`bosotop.diagonalize.regularize_semidefinite` first.
    """


class ResolutionError(BosotopError, ArithmeticError):
    """A numerical result could not be resolved at the requested accuracy."""


class GapClosedError(ResolutionError):
    """A spectral gap needed by the computation is closed (or too small)."""
