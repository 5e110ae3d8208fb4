"""Self-triggered event prediction for linear continuous-time plants."""

from .certificate import PlfCertificate, build_derivative_matrices, lambda_max, make_certificate
from .exceptions import (
    CertificateViolation,
    ConfigError,
    PredictorError,
    SelfTrigError,
    ShapeError,
    SynthesisError,
    VerificationMismatch,
)
from .plant import Feedback, LtiSystem, build_closed_loop
from .predictor import PredictionContext, SolverParams, next_event
from .simulator import SimConfig, run

__all__ = [
    "CertificateViolation",
    "ConfigError",
    "Feedback",
    "LtiSystem",
    "PlfCertificate",
    "PredictionContext",
    "PredictorError",
    "SelfTrigError",
    "ShapeError",
    "SimConfig",
    "SolverParams",
    "SynthesisError",
    "VerificationMismatch",
    "build_closed_loop",
    "build_derivative_matrices",
    "lambda_max",
    "make_certificate",
    "next_event",
    "run",
]
