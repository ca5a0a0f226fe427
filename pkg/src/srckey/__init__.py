"""Finite-key security of BB84 with a tested, possibly correlated source."""

from .bounds import EventProbs, ProtocolParams, SecurityReport, asymptotic_rate, hmin_lower_bound, key_length
from .optimizer import SearchSpace, optimize_rate, rate_curve
from .sampling import SamplingStrategy, exact_classical_error

__version__ = "0.1.0"

__all__ = [
    "EventProbs", "ProtocolParams", "SecurityReport", "asymptotic_rate", "hmin_lower_bound", "key_length",
    "SearchSpace", "optimize_rate", "rate_curve", "SamplingStrategy", "exact_classical_error",
]
