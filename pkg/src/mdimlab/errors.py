"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ResourceError(RuntimeError):
    """The requested computation exceeds a configured size budget."""

    def __init__(self, message: str, required: int | None = None):
        super().__init__(message)
        self.required = required


class ConfigError(ValueError):
    """An experiment configuration failed validation."""

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer}: {message}" if pointer else message)
        self.pointer = pointer
