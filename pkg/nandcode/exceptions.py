"""Custom exceptions for the nandcode package."""

from typing import Optional


class NandCodeError(Exception):
    """Base exception for all nandcode errors."""
    pass


class LengthError(NandCodeError):
    """Exception raised when an input length violates a codec's framing."""

    def __init__(self, message: str, length: Optional[int] = None):
        self.length = length
        super().__init__(message)


class RangeError(NandCodeError):
    """Exception raised when a parameter, symbol or index is out of range."""
    pass


class CodebookCapacityError(NandCodeError):
    """Exception raised when the candidate pool cannot fill a codebook."""

    def __init__(self, pool_size: int, required: int):
        self.pool_size = pool_size
        self.required = required
        super().__init__(
            f"Candidate pool has {pool_size} words but the codebook needs {required}"
        )


class CodebookFormatError(NandCodeError):
    """Exception raised when a codebook file cannot be parsed."""
    pass


class GeometryError(NandCodeError):
    """Exception raised when page or grid geometry does not match."""
    pass


class ChannelError(NandCodeError):
    """Exception raised for invalid channel models or inputs."""
    pass


class ConfigError(NandCodeError):
    """Exception raised when there is a configuration error."""
    pass


class PresetError(NandCodeError):
    """Exception raised when a preset name is unknown."""

    def __init__(self, kind: str, name: str, valid: list[str]):
        self.kind = kind
        self.name = name
        super().__init__(f"Unknown {kind} preset: {name}. Valid values: {', '.join(valid)}")
