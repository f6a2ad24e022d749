"""Exception types shared across the package.

Most derive from ValueError so callers that only care about "bad input"
can catch broadly, while tests and the CLI can distinguish conditions.
"""


class DataError(ValueError):
    """Base class for invalid numeric or structural input."""


class ZeroRow(DataError):
    """A row that must be normalizable has Euclidean norm <= 1e-12."""

    def __init__(self, index: int):
        self.index = index
        super().__init__(f"row {index} has near-zero norm")


class EmptyMatrix(DataError):
    pass


class TooFewRows(DataError):
    pass


class NotSquare(DataError):
    pass


class NotSymmetric(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class DimMismatch(DataError):
    """Embedding or parameter dimensions do not line up."""


class TooFewSamples(DataError):
    pass


class RankDeficient(DataError):
    """Leading eigenvalue of the covariance is numerically zero."""


class EmptySpectrum(DataError):
    pass


class NotNormalized(DataError):
    pass


class BadTemperature(DataError):
    pass


class BadDimension(DataError):
    pass


class ThetaOutOfRange(DataError):
    pass


class SampleTooSmall(DataError):
    pass


class BadBins(DataError):
    pass


class EmptyTeacherList(DataError):
    pass


class NonPositiveQ(DataError):
    """Target distribution contains zero or negative entries."""


class BadSchedule(DataError):
    pass


class InsufficientPairs(DataError):
    """A label has fewer than two items, or the batch wants more labels than exist."""


class NoRelevant(DataError):
    def __init__(self, query: int = -1):
        self.query = query
        msg = "no relevant items" if query < 0 else f"query {query} has no relevant items"
        super().__init__(msg)


class EmptyHistory(DataError):
    pass


class BadConfig(DataError):
    """Configuration value violates an invariant."""


class BadConfigKey(BadConfig):
    """Configuration contains a key that is not part of the schema."""

    def __init__(self, key: str):
        self.key = key
        super().__init__(f"unknown config key: {key}")


class CorruptFile(DataError):
    """A binary input file is truncated or has a wrong magic/shape."""


class NumericFailure(ArithmeticError):
    """Training produced a non-finite loss."""
