"""Exact CR-geometry toolkit: hypersurface invariants, reflection
identities, and jet determination via complete-system integration."""

from .series import CScalar, OrderExhausted, SeriesError, TruncatedSeries

__all__ = [
    "CScalar",
    "OrderExhausted",
    "SeriesError",
    "TruncatedSeries",
]

__version__ = "0.1.0"
