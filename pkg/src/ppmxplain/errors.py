"""Exception hierarchy shared across the pipeline.

Every error carries an ``exit_code`` so the CLI can map failures to its
documented exit-code contract (2 config, 3 data, 4 training, 5 explanation).
"""


class PipelineError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(PipelineError):
    """Invalid or inconsistent run configuration."""

    exit_code = 2


class DataError(PipelineError):
    """Malformed input data or a violated data invariant."""

    exit_code = 3


class InconsistentStaticError(DataError):
    """A column declared static takes more than one value within a case."""


class UnknownAttributeError(DataError):
    """A rule or encoder references an attribute the schema does not define."""


class MixedLengthBucketError(DataError):
    """Index encoding was requested on a bucket with mixed prefix lengths."""


class TrainingError(PipelineError):
    """Model training cannot proceed (e.g. a single-class bucket)."""

    exit_code = 4


class ExplainError(PipelineError):
    """An explanation method cannot run on the given model/data."""

    exit_code = 5
