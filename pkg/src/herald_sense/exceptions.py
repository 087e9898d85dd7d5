"""Exception hierarchy.

Three broad families matter operationally: configuration problems (bad
parameters, unparseable config files), data-ingest problems (malformed or
non-finite sample files), and numeric problems (singular covariance,
non-invertible calibration, cutoff too small).  The CLI maps each family
to its own exit code.
"""


class HeraldSenseError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(HeraldSenseError):
    """Invalid or inconsistent configuration / parameters."""


class IngestError(HeraldSenseError):
    """Sample file could not be parsed into quadrature records."""


class NumericError(HeraldSenseError):
    """A numeric routine left its domain of validity."""


class CutoffTooSmallError(NumericError):
    """Fock-space truncation cannot represent the requested state."""


class SingularCovarianceError(NumericError):
    """Covariance matrix is singular or too ill-conditioned to invert."""


class DegenerateVarianceError(NumericError):
    """Observable variance vanished; sensitivity is undefined."""


class NonMonotonicCurveError(NumericError):
    """Calibration curve is not strictly monotonic on the requested range."""


class OutOfRangeError(NumericError):
    """Measured mean lies outside the calibration curve's range."""


class InsufficientSamplesError(NumericError):
    """Too few records to run the requested estimate."""
