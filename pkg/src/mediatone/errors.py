"""Exception hierarchy.

``ValidationError`` covers bad or insufficient inputs (CLI exit code 2);
``EstimationError`` covers failed numerical estimation (CLI exit code 3).
"""


class MediaToneError(Exception):
    pass


class ValidationError(MediaToneError):
    pass


class EstimationError(MediaToneError):
    pass


class InvalidConfig(ValidationError):
    pass


class NoScoredWords(ValidationError):
    """Document contains no word of the lexicon; its tone is undefined."""


class NoDocuments(ValidationError):
    pass


class NoFirms(ValidationError):
    pass


class EventDateNotTrading(ValidationError):
    pass


class MissingObservation(ValidationError):
    pass


class EmptyWindow(ValidationError):
    """No tone observation inside the requested window."""


class NonpositivePrice(ValidationError):
    pass


class MissingVolume(ValidationError):
    pass


class TooFewEvents(ValidationError):
    pass


class InsufficientData(EstimationError):
    pass


class InsufficientObservations(EstimationError):
    pass


class SingularDesign(EstimationError):
    pass


class Collinearity(EstimationError):
    def __init__(self, columns, message=None):
        self.columns = list(columns)
        super().__init__(message or f"collinear regressors: {', '.join(self.columns)}")


class TooFewClusters(EstimationError):
    pass


class ZeroVariance(EstimationError):
    pass
