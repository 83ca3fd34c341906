"""Pseudospectral toolkit for rotation-modified Benjamin-Ono and intermediate
long wave equations on a large periodic box."""

__version__ = "0.1.0"

from .errors import (
    AccuracyError,
    BlowupError,
    DispersiveLabError,
    DomainError,
    InvalidInputError,
    InvalidParameterError,
    OutOfBandError,
    SingularPointError,
    UndefinedRatioError,
)
from .multiplier_ops import DispersionFamily
from .spectral_core import Grid, RealField

__all__ = [
    "__version__",
    "Grid",
    "RealField",
    "DispersionFamily",
    "DispersiveLabError",
    "InvalidInputError",
    "InvalidParameterError",
    "DomainError",
    "OutOfBandError",
    "SingularPointError",
    "UndefinedRatioError",
    "AccuracyError",
    "BlowupError",
]
