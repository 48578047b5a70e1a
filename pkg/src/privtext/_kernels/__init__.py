"""Nearest-neighbor kernel backend selection.

Tries the compiled Cython kernel first and falls back to the numpy
implementation. ``PRIVTEXT_KERNELS=numpy`` forces the fallback (useful for the
benchmark and for debugging); ``PRIVTEXT_KERNELS=cython`` makes a missing
extension an import error instead of a silent fallback.
"""

from __future__ import annotations

import os

from privtext._kernels import nn_numpy

_choice = os.environ.get("PRIVTEXT_KERNELS", "auto").lower()

if _choice == "numpy":
    _impl = nn_numpy
elif _choice == "cython":
    from privtext._kernels import _nncore as _impl
else:
    try:
        from privtext._kernels import _nncore as _impl
    except ImportError:
        _impl = nn_numpy

BACKEND: str = _impl.backend_name()
sq_distances = _impl.sq_distances
nearest_index = _impl.nearest_index
nearest_index_batch = _impl.nearest_index_batch

__all__ = ["BACKEND", "sq_distances", "nearest_index", "nearest_index_batch", "nn_numpy"]
