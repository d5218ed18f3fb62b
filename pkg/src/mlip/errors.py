class MLIPError(Exception):
    """Base class for numerical failures raised by this package."""


class SingularSystemError(MLIPError):
    """A linear system needed for an orbit is (numerically) singular."""


class UncontrollableError(MLIPError):
    """The (A, B) pair cannot be stabilized or placed."""


class ConvergenceError(MLIPError):
    """An iterative solver did not converge."""


class SchemaError(ValueError):
    """Input document does not match the documented schema."""
