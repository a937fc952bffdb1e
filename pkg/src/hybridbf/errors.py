"""Exception hierarchy shared by every module."""


class HybridBFError(Exception):
    """Base class for all library errors."""


class ConvergenceFailure(HybridBFError):
    pass


class AllZeroMatrix(HybridBFError):
    pass


class RankDeficient(HybridBFError):
    pass


class SingularGram(HybridBFError):
    pass


class DimensionMismatch(HybridBFError, ValueError):
    pass


class InvalidPreset(HybridBFError, ValueError):
    pass


class OddStreams(HybridBFError, ValueError):
    pass


class DivergenceDetected(HybridBFError):
    pass


class UntrainedModel(HybridBFError):
    pass


class IllConditioned(HybridBFError):
    pass


class InvalidConfig(HybridBFError, ValueError):
    """Raised for malformed or incomplete run configuration."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field
