"""Exception types shared across the package."""


class HeadnetError(Exception):
    """Base class for all package-specific errors."""


class FormatError(HeadnetError, ValueError):
    """A file does not conform to the expected on-disk layout.

    ``offset`` is the byte position at which the problem was detected.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ProtocolError(HeadnetError):
    """The sample server violated the wire protocol.

    ``header`` carries the raw frame header bytes when one was read, so
    the failure can be diagnosed from the log alone.
    """

    def __init__(self, message, header=None):
        if header is not None:
            message = f"{message} (header {header.hex()})"
        super().__init__(message)
        self.header = header


class EmptyBrainError(HeadnetError):
    """Post-processing found no brain voxels in the model output."""
