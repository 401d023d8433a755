"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Input data violates a schema or invariant; message names the offending field."""


class NotNativeError(ValueError):
    """The target graph has no embedding into the device topology."""


class CapExceededError(ValueError):
    """Instance exceeds a configured exact-search or enumeration cap."""


class SolutionError(ValueError):
    """A variable assignment cannot be decoded into a physical circuit."""


class ExternalSolverError(RuntimeError):
    """External solver output was unusable (unsat, unparsable, or incomplete)."""
