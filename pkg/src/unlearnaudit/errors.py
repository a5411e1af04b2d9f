"""Exception hierarchy shared by every stage of the pipeline."""


class UnlearnAuditError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(UnlearnAuditError, ValueError):
    """An experiment or farm configuration is invalid."""


class DataError(UnlearnAuditError, ValueError):
    """Input data could not be loaded, encoded or split."""


class DegenerateTrainingSetError(UnlearnAuditError, ValueError):
    """A training set is empty or holds a single class."""


class MalformedModelError(UnlearnAuditError, ValueError):
    """A serialized model envelope is truncated or corrupt."""


class ModelVersionError(MalformedModelError):
    """A serialized model carries an unsupported format version."""
