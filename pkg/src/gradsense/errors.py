"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when inputs fail geometric or schema validation."""


class ScenarioError(ValidationError):
    """Raised when a scenario file cannot be parsed or validated."""


class ComputationError(RuntimeError):
    """Raised when a numerical routine cannot produce a result."""
