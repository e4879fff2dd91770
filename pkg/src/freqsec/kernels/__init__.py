"""Hot loops, compiled with numba when available.

Set ``FREQSEC_NO_JIT=1`` to force the pure numpy/python implementations; both
expose the same functions and are tested against each other.
"""
import os

from . import _numpy as numpy_impl

try:
    from . import _numba as numba_impl
except ImportError:  # numba missing
    numba_impl = None

USE_JIT = numba_impl is not None and os.environ.get("FREQSEC_NO_JIT", "") not in ("1", "true", "yes")
backend = numba_impl if USE_JIT else numpy_impl
BACKEND_NAME = "numba" if USE_JIT else "numpy"

simulate_swing = backend.simulate_swing
batch_security = backend.batch_security

__all__ = ["simulate_swing", "batch_security", "BACKEND_NAME", "numpy_impl", "numba_impl"]
