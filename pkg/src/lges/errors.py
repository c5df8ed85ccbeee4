"""Exception types raised across the package."""


class LgesError(Exception):
    """Base class for errors raised by this package."""


class InvalidGraphError(LgesError, ValueError):
    """A graph violates a structural precondition (cycle, wrong class, size)."""


class NoExtensionError(InvalidGraphError):
    """A PDAG admits no consistent DAG extension."""


class InvalidOperatorError(LgesError, ValueError):
    """An operator does not apply to the given state."""


class InternalConsistencyError(LgesError, RuntimeError):
    """An invariant that should hold by construction was violated."""


class InsufficientDataError(LgesError, ValueError):
    pass


class InvalidDataError(LgesError, ValueError):
    pass


class ConfigurationError(LgesError, ValueError):
    """Bad user-supplied configuration (knowledge file, manifest, flags)."""
