"""
Error types for ssmdrive

Every failure raised on purpose by the package derives from SsmDriveError so the
command surface can turn it into a clean exit code.
"""


class SsmDriveError(Exception):
    """Base class for all ssmdrive errors."""


class DimensionError(SsmDriveError):
    """Operand shapes are incompatible."""

    def __init__(self, message: str, *shapes: tuple[int, ...]) -> None:
        if shapes:
            message = f"{message}: " + " vs ".join(str(list(s)) for s in shapes)
        super().__init__(message)
        self.shapes = shapes


class ContractError(SsmDriveError):
    """A documented pre-condition of an operation was violated."""


class ConfigError(SsmDriveError):
    """Invalid configuration, unknown template or mismatched camera rig."""

    def __init__(self, message: str, line: int | None = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class CheckpointError(SsmDriveError):
    """A checkpoint file is malformed or does not fit the model."""
