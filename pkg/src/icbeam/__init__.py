"""Robust transceiver design for MIMO interference channels under imperfect CSI.

A library plus CLI for designing per-stream linear precoders and
interference-suppression filters in a K-user MIMO interference channel
when only a noisy channel estimate is available, and for reproducing
sum-rate, energy-efficiency, convergence, and approximation-accuracy
experiments around that design.
"""

__version__ = "0.1.0"

from .errors import DimensionMismatch, InvalidSpec, NonFinite, NotPositiveDefinite
from .numerics import EigPair, leading_generalized_eigvec, min_eigvec, orthonormal_columns

__all__ = [
    "DimensionMismatch",
    "InvalidSpec",
    "NonFinite",
    "NotPositiveDefinite",
    "EigPair",
    "leading_generalized_eigvec",
    "min_eigvec",
    "orthonormal_columns",
    "__version__",
]
