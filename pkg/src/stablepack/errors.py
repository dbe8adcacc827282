"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """Raised when an argument violates a documented precondition."""


class ContractViolation(RuntimeError):
    """Raised when an operation is applied outside its contract, e.g. an illegal action."""


class InvalidRecordError(ValueError):
    """Raised for malformed decision records (zero probability at the chosen action, ...)."""


class VerificationError(RuntimeError):
    """Raised when a stored solution fails re-verification."""


class SchemaVersionError(ValueError):
    """Raised when a file carries an unknown schema or major version."""
