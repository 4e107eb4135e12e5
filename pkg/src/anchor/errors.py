"""Exception hierarchy.

The CLI maps :class:`ValidationError` (and subclasses) to exit code 2 and
:class:`AnchorRuntimeError` to exit code 1.
"""


class AnchorError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(AnchorError, ValueError):
    """Bad input data: non-finite values, wrong shapes, malformed files."""


class ConfigError(ValidationError):
    """Invalid configuration or hyperparameters."""


class NoPeriodicityError(ValidationError):
    """The spectrum carries no energy outside DC, so no period can be extracted."""


class AnchorRuntimeError(AnchorError, RuntimeError):
    """Numerical failure during a computation (divergence, non-finite activations)."""


class UsageError(AnchorError, RuntimeError):
    """API misuse, e.g. calling backward with a stale or consumed cache."""
