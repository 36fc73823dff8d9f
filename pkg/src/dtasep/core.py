"""Selects the compiled kernels when they were built, the NumPy ones otherwise.

Set ``DTASEP_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _core_py as fallback

compiled = None
if not os.environ.get("DTASEP_PURE_PYTHON"):
    try:
        from . import _core as compiled
    except ImportError:  # extension not built
        compiled = None

impl = compiled if compiled is not None else fallback
HAVE_COMPILED = compiled is not None

simulate_batch = impl.simulate_batch
endpoint_weights = impl.endpoint_weights
