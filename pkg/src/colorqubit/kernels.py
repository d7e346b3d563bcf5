"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set ``COLORQUBIT_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("COLORQUBIT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

IMPLEMENTATION = _impl.IMPLEMENTATION
slab_fundamental_index = _impl.slab_fundamental_index
mf_accumulate = _impl.mf_accumulate
hermite = _kernels_py.hermite
