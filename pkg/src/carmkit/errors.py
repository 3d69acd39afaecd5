"""Exception hierarchy shared across carmkit modules."""


class CarmError(Exception):
    """Base class for all carmkit errors."""


class DomainError(CarmError):
    """An input value is outside the mathematical domain of an operation."""


class ConfigurationError(CarmError):
    """A configuration object is incomplete or inconsistent."""


class UnsupportedHostError(CarmError):
    """The host architecture is not one the catalog knows about."""


class FeatureAbsentError(CarmError):
    """A required hardware feature (e.g. RVV) is missing on this host."""


class KernelSpecError(CarmError):
    """A kernel specification cannot be realized (bad size, unknown combo)."""


class CodegenError(CarmError):
    """Generated assembly failed its own static verification."""


class ParseError(CarmError):
    """A profiler report could not be parsed.

    Carries the 1-based line number when known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ToolchainError(CarmError):
    """Assembling or loading a kernel through the system toolchain failed."""


class CalibrationError(CarmError):
    """Outer-iteration calibration could not reach the target time window."""


class BackendError(CarmError):
    """An external profiler backend is missing or exited abnormally."""


class SchemaError(CarmError):
    """A stored result file does not match the expected schema version."""
