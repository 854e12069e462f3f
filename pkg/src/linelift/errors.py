"""Exception types shared across the package."""


class LineLiftError(Exception):
    """Base class for all package-specific errors."""


class DegenerateInputError(LineLiftError):
    """Raised for geometrically degenerate inputs (e.g. points at infinity)."""


class VanishingPointEstimationError(LineLiftError):
    """Raised when fewer than three orthogonal line clusters can be found.

    Callers may recover by providing per-line direction labels in the
    instance file instead of relying on estimation.
    """


class ModelBuildError(LineLiftError):
    """Raised when MILP assembly encounters inconsistent variable ids."""


class DisconnectedGraphError(LineLiftError):
    """Raised when an operation requires a connected line graph."""


class SceneGenerationError(LineLiftError):
    """Raised when scene synthesis cannot produce a valid instance."""


class SchemaError(LineLiftError):
    """Raised when an instance or result file fails schema validation."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(message)
        self.path = path
