"""Exception taxonomy shared across the package.

Exit-code mapping used by the CLI: ConfigurationError -> 1,
DataError -> 2, TrainingDivergenceError -> 3.
"""


class DucaError(Exception):
    """Base class for all package errors."""


class ConfigurationError(DucaError):
    """Invalid configuration value, unknown preset, or bad parameter combination."""


class StructuralError(DucaError):
    """Shape or architecture mismatch between tensors or networks."""


class DataError(DucaError):
    """Missing, unreadable, or inconsistent input data."""


class ManifestError(DataError):
    """Domain manifest is malformed or violates its invariants."""


class EmptyBufferError(DucaError):
    """Raised when sampling from an empty replay buffer."""


class TrainingDivergenceError(DucaError):
    """Non-finite loss encountered during training."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
