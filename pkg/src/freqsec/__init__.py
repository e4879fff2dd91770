"""Frequency-secured scheduling: closed-form post-fault frequency, security
margins, a mixed-integer SOC solver, time-domain validation and desk-scale
dispatch."""
from .core import (ChanceSpec, FreqSecError, FrService, InvalidInput, Portfolio, SecurityReport, SecuritySpec,
                   SystemSnapshot, load_system, validate_portfolio)
from .dynamics import decompose, delta_f, fr_total, nadir
from .security import assess, assess_batch

__version__ = "0.1.0"

__all__ = [
    "ChanceSpec", "FreqSecError", "FrService", "InvalidInput", "Portfolio", "SecurityReport", "SecuritySpec",
    "SystemSnapshot", "load_system", "validate_portfolio", "decompose", "delta_f", "fr_total", "nadir",
    "assess", "assess_batch",
]
