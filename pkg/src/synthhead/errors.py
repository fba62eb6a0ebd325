"""Exception types shared across the package."""


class SynthheadError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SynthheadError, ValueError):
    """A configuration value or combination of values is unusable."""


class OutOfBoundsError(SynthheadError, ValueError):
    """A geometry does not fit inside the requested voxel grid."""


class FormatError(SynthheadError, ValueError):
    """A file does not conform to the expected on-disk layout.

    ``offset`` is the byte position at which the problem was detected.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ProtocolError(SynthheadError):
    """A stream peer violated the wire protocol."""
