"""Graph kernels with a compiled backend and a pure-Python fallback.

The backend is chosen at import time. Set ``METAVIEW_BACKEND`` to ``python``
to force the fallback or ``ext`` to require the compiled module; the default
``auto`` uses the compiled module when it was built.
"""
import os

from . import _pykernels

_requested = os.environ.get("METAVIEW_BACKEND", "auto").lower()
if _requested not in ("auto", "python", "ext"):
    raise ImportError(f"METAVIEW_BACKEND must be auto, python or ext, got {_requested!r}")

_ext = None
if _requested != "python":
    try:
        from . import _ckernels as _ext
    except ImportError:
        if _requested == "ext":
            raise

BACKEND = "ext" if _ext is not None else "python"
_impl = _ext if _ext is not None else _pykernels

neighbor_sum = _impl.neighbor_sum
harmonic_centrality = _impl.harmonic_centrality
connected_components = _impl.connected_components

__all__ = [
    "BACKEND",
    "neighbor_sum",
    "harmonic_centrality",
    "connected_components",
]
