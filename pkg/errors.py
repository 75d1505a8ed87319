"""
Exception hierarchy shared by every package.

The command-line runner maps ConfigError to exit status 1 and DataError /
VocabularyError to exit status 2.
"""


class LabError(Exception):
    """Root of all errors raised on purpose by this code base."""


class DimensionError(LabError, ValueError):
    """Tensor shapes that do not fit the operation."""


class NumericsError(LabError, ValueError):
    """A well-shaped input the numeric kernels still cannot handle (e.g. a fully masked softmax row)."""


class VocabularyError(LabError, ValueError):
    """A token id or symbol outside the vocabulary."""


class DataError(LabError):
    """Malformed or inconsistent input data."""


class ConstraintParseError(DataError):
    def __init__(self, line_number, message):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class CheckpointFormatError(DataError):
    """Bad magic, unsupported version or truncated checkpoint."""


class CheckpointCompatibilityError(DataError):
    """Checkpoint tensors do not match the model configuration."""


class ConfigError(LabError):
    """Unknown, missing or ill-typed configuration keys and command-line usage errors."""
