"""Exception hierarchy shared across the codec.

Every error raised by the library derives from CodecError so the CLI can
report a single categorized line and exit nonzero.
"""


class CodecError(Exception):
    """Base class for all codec failures."""

    category = "error"


class EventFormatError(CodecError):
    """Malformed or inconsistent event text input."""

    category = "event-format"


class ConfigError(CodecError):
    """Bad configuration file or flag combination."""

    category = "config"


class ModelFormatError(CodecError):
    """Model file cannot be parsed or fails its checksum."""

    category = "model-format"


class ContainerFormatError(CodecError):
    """Compressed container cannot be parsed or is internally inconsistent."""

    category = "container-format"


class ChecksumError(ContainerFormatError):
    """Stored checksum does not match the recomputed one."""

    category = "checksum"


class MismatchError(CodecError):
    """Model and container (or model and CLI flags) disagree."""

    category = "mismatch"


class TrainingDivergedError(CodecError):
    """Training produced a non-finite loss."""

    category = "training"
