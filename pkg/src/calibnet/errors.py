"""Exception types shared across the calibration library."""


class CalibrationError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateGain(CalibrationError):
    """A sensor gain (or inverse gain) is zero, so the model cannot be inverted."""


class InvalidSize(CalibrationError):
    """A dimension argument is below the minimum the construction requires."""


class DimensionMismatch(CalibrationError):
    """Shapes of the supplied operands do not agree."""


class MissingNoiseModel(CalibrationError):
    """Whitened weighting was requested without a usable noise model."""


class IndexOutOfRange(CalibrationError):
    """A sensor index is outside 1..N."""


class DuplicateReference(CalibrationError):
    """The same sensor was designated as a reference more than once."""


class SingularKkt(CalibrationError):
    """The KKT system is numerically singular (insufficient constraints or
    degenerate data, e.g. all sensors constant)."""


class DegenerateData(CalibrationError):
    """The data does not isolate a blind-calibration direction."""


class DegenerateNoise(CalibrationError):
    """A noise variance is zero where the Fisher information is undefined."""


class ConstantPhenomenon(CalibrationError):
    """The source signal has zero variance, so gains are unidentifiable."""


class UnresolvedAmbiguity(CalibrationError):
    """The constraint set does not identify the parameters (projected Fisher
    information is singular)."""


class InvalidConfig(CalibrationError):
    """A configuration value violates its documented range."""


class EmptyInput(CalibrationError):
    """An operation received an empty collection."""


class UnknownSensorId(CalibrationError):
    """A sensor id does not appear in the dataset header."""


class ParseError(CalibrationError):
    """A CSV file could not be parsed; the message names the offending row."""


class NonNumericCell(ParseError):
    """A data cell could not be read as a number."""


class TooFewRows(ParseError):
    """A dataset has fewer than two sample rows."""
