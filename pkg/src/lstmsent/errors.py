"""Exception hierarchy shared by every lstmsent module."""


class LstmSentError(Exception):
    """Base class for all package errors."""


class ConfigError(LstmSentError, ValueError):
    """Invalid configuration or argument value."""


class ShapeError(LstmSentError, ValueError):
    """Array dimensions do not line up."""


class DomainError(LstmSentError, ValueError):
    """Value outside the domain of a function (probability, rating, ...)."""


class RangeError(LstmSentError, ValueError):
    """Empty or inverted numeric range."""


class EncodingError(LstmSentError, ValueError):
    """Token id outside the embedding table."""


class InsufficientLengthError(LstmSentError, ValueError):
    """Sequence too short for the requested computation."""


class DataError(LstmSentError):
    """Problem with an input dataset file."""


class MissingColumnsError(DataError):
    pass


class EmptyDatasetError(DataError):
    pass


class WeightsError(LstmSentError):
    """Base class for weight-file load failures."""


class WeightsVersionError(WeightsError):
    pass


class WeightsShapeError(WeightsError):
    pass


class MalformedWeightsError(WeightsError):
    pass
