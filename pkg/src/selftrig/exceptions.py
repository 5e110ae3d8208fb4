"""Exception hierarchy shared across the package.

Each leaf class carries the process exit code the command line front end
reports for it.
"""


class SelfTrigError(Exception):
    """Base class for all errors raised by :mod:`selftrig`."""

    exit_code = 1


class ShapeError(SelfTrigError, ValueError):
    """Matrix or vector dimensions are inconsistent."""

    exit_code = 2


class SynthesisError(SelfTrigError):
    """A closed loop or certificate cannot be constructed.

    Raised when ``A - BK`` is not Hurwitz, when a requested decay rate is not
    below ``lambda_max``, or when a supplied ``P`` fails validation.
    """

    exit_code = 3


class ConfigError(SelfTrigError, ValueError):
    """A configuration file is missing, malformed or violates a constraint."""

    exit_code = 2


class CertificateViolation(SelfTrigError):
    """The Lyapunov-like function exceeded its threshold during a run."""

    exit_code = 3


class PredictorError(SelfTrigError):
    """The event predictor could not produce a next update instant."""

    exit_code = 4


class NoCrossingError(PredictorError):
    """No sign change of the threshold gap was found before the horizon."""


class DegenerateBracketError(PredictorError):
    """Bracket search cannot start because the minimizer equals ``t_k``."""


class VerificationMismatch(SelfTrigError):
    """Predictor and brute-force oracle disagree beyond tolerance."""

    exit_code = 5
