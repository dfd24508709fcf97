"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the numpy
implementation.  Setting LATMESH_KERNELS=python forces the fallback.
"""

from __future__ import annotations

import os

from latmesh import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("LATMESH_KERNELS", "").lower() != "python":
    try:
        from latmesh import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass

iroot = _impl.iroot
hyperbola_counts = _impl.hyperbola_counts
naive_count = _impl.naive_count
window_multiplicities = _impl.window_multiplicities
piece_integrals = _impl.piece_integrals
cosine_sums = _impl.cosine_sums

# kernels whose compiled versions run without the GIL
RELEASES_GIL = BACKEND == "cython"


def backends() -> dict:
    """Both implementations keyed by name, for benchmarks and cross-checks."""
    out = {"python": _pykernels}
    try:
        from latmesh import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
