"""Exception hierarchy shared across the package.

Split along the CLI's exit-code contract: config/schema problems map to
exit code 2, everything else raised by the library maps to exit code 1.
"""


class SdqmError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(SdqmError):
    """An on-disk artifact is malformed (bad magic, bad JSON, truncation)."""


class ValidationError(SdqmError):
    """An artifact parsed cleanly but violates a dataset invariant."""


class ConfigError(SdqmError):
    """A run configuration is invalid (unknown keys, bad values, missing paths)."""


class SchemaMismatchError(SdqmError):
    """A model and a feature row disagree on the feature schema."""
