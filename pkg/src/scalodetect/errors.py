"""Exception types shared across the pipeline.

Every error the library raises deliberately derives from PipelineError so the
CLI can map failures onto machine-readable codes and exit statuses.
"""


class PipelineError(Exception):
    """Base class for all deliberate pipeline failures."""

    code = "error"


class ArgumentError(PipelineError, ValueError):
    """An argument violates a documented precondition."""

    code = "argument"


class FormatError(PipelineError):
    """An input file does not have the expected structure."""

    code = "format"


class DataError(PipelineError):
    """Structurally valid input carries unusable values."""

    code = "data"


class ParseError(PipelineError):
    """A detection or label file cannot be parsed."""

    code = "parse"


class StateError(PipelineError):
    """An operation was invoked on an object in the wrong state."""

    code = "state"


class ConfigError(PipelineError):
    """A configuration file or override is invalid.

    `field` holds the dotted path of the offending entry, e.g. "cwt.f_min".
    """

    code = "config"

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
