"""Exception hierarchy shared by all qfluct modules.

Each error family maps to one CLI exit code (see ``qfluct.cli``):
invalid input -> 2, numerical failure -> 3, I/O failure -> 4.
"""


class QfluctError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1
    code = "E_INTERNAL"


class InvalidInputError(QfluctError):
    """A precondition or type invariant was violated by caller input."""

    exit_code = 2
    code = "E_INVALID_INPUT"


class NumericalError(QfluctError):
    """A numerical procedure failed to converge or lost validity."""

    exit_code = 3
    code = "E_NUMERICAL"


class FitFailureError(NumericalError):
    """A curve fit could not resolve the requested parameters."""

    code = "E_FIT_FAILURE"


class AmbiguityError(FitFailureError):
    """A multi-component fit is degenerate (components not separable)."""

    code = "E_AMBIGUOUS_FIT"


class IOFailureError(QfluctError):
    """File reading/writing failed (format, schema, or filesystem)."""

    exit_code = 4
    code = "E_IO"


class FileFormatError(IOFailureError):
    """A data file does not conform to its documented schema."""

    code = "E_FILE_FORMAT"


class SchemaVersionError(IOFailureError):
    """A file declares a schema version this toolkit does not support."""

    code = "E_SCHEMA_VERSION"


class OutputExistsError(IOFailureError):
    """Refusing to overwrite an existing output without --force."""

    code = "E_OUTPUT_EXISTS"
