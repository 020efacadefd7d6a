"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes (config 2, data 3, numerical 4,
anything else 5), so library code should raise the most specific type.
"""


class SsmBackboneError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SsmBackboneError):
    """Invalid or incomplete configuration (bad flags, unknown tags, ...)."""


class DataError(SsmBackboneError):
    """Input data violates a contract (parse failure, short signal, ...)."""


class NumericalError(SsmBackboneError):
    """A numerical procedure failed (singular system, defective matrix, ...)."""


class ResonanceError(NumericalError):
    """Near-resonant denominators block the manifold construction.

    Carries the offending entries and, when available, the full audit
    report so callers can inspect which eigenvalue combinations collide.
    """

    def __init__(self, message, entries=None, audit=None):
        super().__init__(message)
        self.entries = list(entries) if entries is not None else []
        self.audit = audit
